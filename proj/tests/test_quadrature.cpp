#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "cvqkd/quadrature.hpp"

using namespace cvqkd;

namespace {

double factorial2(int n) {  // (2n-1)!! for moment checks
    double p = 1.0;
    for (int k = 2 * n - 1; k > 1; k -= 2) p *= k;
    return p;
}

}  // namespace

TEST_CASE("gauss-hermite weights and moments") {
    for (const int n : {1, 5, 21, 40}) {
        const QuadratureRule gh = gauss_hermite(n);
        REQUIRE(gh.nodes.size() == static_cast<size_t>(n));
        double wsum = 0.0;
        for (const double w : gh.weights) {
            CHECK(w > 0.0);
            wsum += w;
        }
        CHECK(wsum == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
    }

    // n-point rule is exact through degree 2n-1: even moments
    // int x^{2k} e^{-x^2} dx = sqrt(pi) (2k-1)!! / 2^k.
    const QuadratureRule gh = gauss_hermite(6);
    for (int k = 0; k <= 5; ++k) {
        double acc = 0.0;
        for (size_t i = 0; i < gh.nodes.size(); ++i)
            acc += gh.weights[i] * std::pow(gh.nodes[i], 2 * k);
        CHECK(acc == doctest::Approx(std::sqrt(M_PI) * factorial2(k) /
                                     std::pow(2.0, k))
                         .epsilon(1e-12));
    }
}

TEST_CASE("gauss-hermite symmetry is exact") {
    for (const int n : {4, 7, 21}) {
        const QuadratureRule gh = gauss_hermite(n);
        for (int i = 0; i < n; ++i) {
            CHECK(gh.nodes[i] == -gh.nodes[n - 1 - i]);
            CHECK(gh.weights[i] == gh.weights[n - 1 - i]);
        }
        if (n % 2 == 1) CHECK(gh.nodes[n / 2] == 0.0);
    }
}

TEST_CASE("gauss-legendre on [-1, 1]") {
    const QuadratureRule gl = gauss_legendre(5);
    double wsum = 0.0;
    for (const double w : gl.weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));

    // exact for degree 9: int x^8 = 2/9
    double m8 = 0.0;
    for (size_t i = 0; i < gl.nodes.size(); ++i)
        m8 += gl.weights[i] * std::pow(gl.nodes[i], 8);
    CHECK(m8 == doctest::Approx(2.0 / 9.0).epsilon(1e-13));

    for (int i = 0; i < 5; ++i) {
        CHECK(gl.nodes[i] == -gl.nodes[4 - i]);
        CHECK(gl.weights[i] == gl.weights[4 - i]);
    }
    CHECK(gl.nodes[2] == 0.0);
}

TEST_CASE("mapped gauss-legendre integrates smooth functions") {
    const QuadratureRule gl = gauss_legendre(20, 0.0, M_PI);
    double acc = 0.0;
    for (size_t i = 0; i < gl.nodes.size(); ++i) acc += gl.weights[i] * std::sin(gl.nodes[i]);
    CHECK(acc == doctest::Approx(2.0).epsilon(1e-13));

    // weights scale with the interval length
    const QuadratureRule gl2 = gauss_legendre(8, 2.0, 5.0);
    double len = 0.0;
    for (const double w : gl2.weights) len += w;
    CHECK(len == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("invalid node counts are rejected") {
    CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_legendre(-3), std::invalid_argument);
}
