// Tests for the postselected key-rate integral and the drivers around it:
// photon-number optimization, distance sweeps, and convergence certification.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cvqkd/key_rate.hpp"
#include "cvqkd/quadrature.hpp"

using namespace cvqkd;

namespace {

ProtocolConfig config_at(double d_km, double xi1, double eta2, double xi2,
                         double alpha_sq) {
    ProtocolConfig cfg;
    cfg.link = LinkModel::make({distance_to_transmission(d_km, 0.2), xi1}, {eta2, xi2});
    cfg.signal.alpha = std::sqrt(alpha_sq);
    cfg.threads = 1;
    return cfg;
}

}  // namespace

TEST_CASE("nearly lossless noise-free link reduces to the mutual-information integral") {
    // With eta1 -> 1 and no excess noise the attacker holds next to nothing
    // and the rate collapses to int [P(m|a) + P(-m|a)] (1 - h(eps)) dm, which
    // an ordinary quadrature can evaluate without any of the machinery.
    ProtocolConfig cfg;
    cfg.link = LinkModel::make({1.0 - 1e-6, 0.0}, {1.0, 0.0});
    cfg.signal.alpha = std::sqrt(0.5);
    cfg.n_trunc = 8;
    cfg.y_nodes = 1;
    cfg.m_grid = 32;
    cfg.threads = 1;

    const ChannelParams total = compose_channels(cfg.link);
    const double m_max = default_m_max(cfg.link, cfg.signal);
    const QuadratureRule gl = gauss_legendre(200, 0.0, m_max);
    double oracle = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double m = gl.nodes[i];
        const double dens = quadrature_pdf(m, cfg.signal.alpha, total) +
                            quadrature_pdf(m, -cfg.signal.alpha, total);
        const double eps = bit_error_rate(m, cfg.signal.alpha, total);
        oracle += gl.weights[i] * dens * (1.0 - binary_entropy(eps));
    }

    const RatePair pair = secret_key_rate_both(cfg);
    CHECK(pair.dr.rate == doctest::Approx(oracle).epsilon(1e-4));
    CHECK(pair.rr.rate == doctest::Approx(oracle).epsilon(1e-4));
    CHECK(pair.dr.converged);
    CHECK(pair.dr.postselection_fraction > 0.99);
    CHECK(pair.dr.postselection_fraction <= 1.0);
}

TEST_CASE("deep loss drives the direct scheme to an exact zero") {
    ProtocolConfig cfg = config_at(60.0, 0.01, 1.0, 0.0, 0.5);
    cfg.scheme = Scheme::DR;
    cfg.n_trunc = 12;
    cfg.y_nodes = 1;
    const KeyRatePoint point = secret_key_rate(cfg);
    CHECK(point.rate == 0.0);
    CHECK(point.postselection_fraction == 0.0);
    CHECK(point.converged);  // zero is the honest converged answer here
}

TEST_CASE("reverse scheme keeps at least the outcomes the direct scheme keeps") {
    ProtocolConfig cfg = config_at(10.0, 0.01, 1.0, 0.0, 0.5);
    cfg.n_trunc = 10;
    cfg.y_nodes = 1;
    cfg.m_grid = 16;
    const RatePair pair = secret_key_rate_both(cfg);
    CHECK(pair.dr.postselection_fraction >= 0.0);
    CHECK(pair.dr.postselection_fraction <= 1.0);
    CHECK(pair.rr.postselection_fraction >= pair.dr.postselection_fraction - 1e-12);
    CHECK(pair.rr.rate >= pair.dr.rate - 1e-12);
}

TEST_CASE("integrand folds both signs and clamps losing slices to zero") {
    ProtocolConfig cfg = config_at(10.0, 0.01, 1.0, 0.0, 0.5);
    cfg.n_trunc = 10;
    cfg.y_nodes = 1;

    const ChannelParams total = compose_channels(cfg.link);
    const double m = 0.8;
    const SliceResult slice = compute_slice(m, cfg);
    CHECK(slice.eps == bit_error_rate(m, cfg.signal.alpha, total));
    CHECK(slice.i_ab == mutual_information(slice.eps, cfg.signal.f));
    CHECK(slice.chi_rr <= slice.chi_dr + 1e-12);
    CHECK(slice.chi_rr >= 0.0);
    CHECK(slice.chi_dr <= 1.0);

    const double dens = quadrature_pdf(m, cfg.signal.alpha, total) +
                        quadrature_pdf(m, -cfg.signal.alpha, total);
    cfg.scheme = Scheme::DR;
    CHECK(key_rate_integrand(m, cfg) ==
          doctest::Approx(dens * std::max(slice.i_ab - slice.chi_dr, 0.0))
              .epsilon(1e-12));

    // Deep in the loss-dominated regime every slice loses.
    ProtocolConfig dead = config_at(60.0, 0.01, 1.0, 0.0, 0.5);
    dead.n_trunc = 10;
    dead.y_nodes = 1;
    dead.scheme = Scheme::DR;
    CHECK(key_rate_integrand(0.5, dead) == 0.0);

    CHECK_THROWS_AS(key_rate_integrand(0.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(key_rate_integrand(-0.4, cfg), std::invalid_argument);
}

TEST_CASE("integration domain extensions and refinements do not move the rate") {
    ProtocolConfig cfg = config_at(10.0, 0.01, 1.0, 0.0, 0.5);
    cfg.n_trunc = 12;
    cfg.y_nodes = 1;
    cfg.m_grid = 32;
    const RatePair base = secret_key_rate_both(cfg);

    SUBCASE("doubling m_max only adds negligible tail mass") {
        cfg.m_max = 2.0 * default_m_max(cfg.link, cfg.signal);
        const RatePair wide = secret_key_rate_both(cfg);
        CHECK(std::abs(wide.dr.rate - base.dr.rate) < 1e-9);
        CHECK(std::abs(wide.rr.rate - base.rr.rate) < 1e-9);
    }
    SUBCASE("doubling m_grid leaves the converged rate fixed") {
        cfg.m_grid = 64;
        const RatePair fine = secret_key_rate_both(cfg);
        CHECK(std::abs(fine.dr.rate - base.dr.rate) <= 1e-10 * base.dr.rate);
        CHECK(std::abs(fine.rr.rate - base.rr.rate) <= 1e-10 * base.rr.rate);
    }
}

TEST_CASE("thread count does not change the numbers") {
    ProtocolConfig cfg = config_at(25.0, 0.005 / 0.9, 0.9, 0.005, 0.5);
    cfg.n_trunc = 8;
    cfg.y_nodes = 11;
    cfg.m_grid = 16;

    cfg.threads = 1;
    const RatePair serial = secret_key_rate_both(cfg);
    cfg.threads = 4;
    const RatePair parallel = secret_key_rate_both(cfg);
    CHECK(serial.dr.rate == parallel.dr.rate);
    CHECK(serial.rr.rate == parallel.rr.rate);
    CHECK(serial.dr.postselection_fraction == parallel.dr.postselection_fraction);
    CHECK(serial.rr.postselection_fraction == parallel.rr.postselection_fraction);
    CHECK(serial.dr.stats.min_eigenvalue == parallel.dr.stats.min_eigenvalue);
}

TEST_CASE("configuration echo resolves the defaulted cutoff and scheme") {
    ProtocolConfig cfg = config_at(10.0, 0.01, 1.0, 0.0, 0.5);
    cfg.n_trunc = 8;
    cfg.y_nodes = 1;
    cfg.m_grid = 16;
    cfg.scheme = Scheme::RR;

    const ChannelParams total = compose_channels(cfg.link);
    const double expect =
        std::sqrt(total.eta) * cfg.signal.alpha + 6.0 * std::sqrt((1.0 + total.xi) / 4.0);
    CHECK(default_m_max(cfg.link, cfg.signal) == doctest::Approx(expect).epsilon(1e-14));

    const KeyRatePoint point = secret_key_rate(cfg);
    CHECK(point.config.m_max == default_m_max(cfg.link, cfg.signal));
    CHECK(point.config.scheme == Scheme::RR);
}

TEST_CASE("invalid numerical settings are rejected up front") {
    ProtocolConfig cfg = config_at(10.0, 0.01, 1.0, 0.0, 0.5);
    SUBCASE("even node count") {
        cfg.y_nodes = 10;
        CHECK_THROWS_AS(secret_key_rate(cfg), std::invalid_argument);
    }
    SUBCASE("grid below one panel") {
        cfg.m_grid = 7;
        CHECK_THROWS_AS(secret_key_rate(cfg), std::invalid_argument);
    }
    SUBCASE("cutoff inside the signal peak") {
        cfg.m_max = 0.1;  // below sqrt(eta)*alpha ~ 0.56
        CHECK_THROWS_AS(secret_key_rate(cfg), std::invalid_argument);
    }
    SUBCASE("no photon-number states") {
        cfg.n_trunc = 0;
        CHECK_THROWS_AS(secret_key_rate(cfg), std::invalid_argument);
    }
    SUBCASE("zero amplitude") {
        cfg.signal.alpha = 0.0;
        CHECK_THROWS_AS(secret_key_rate(cfg), std::invalid_argument);
    }
}

TEST_CASE("alpha grid enumeration") {
    AlphaGrid grid;
    grid.min_sq = 0.3;
    grid.max_sq = 0.4;
    grid.step = 0.05;
    const std::vector<double> v = grid.values();
    REQUIRE(v.size() == 3);
    CHECK(v[0] == 0.3);
    CHECK(v[1] == doctest::Approx(0.35).epsilon(1e-14));
    CHECK(v[2] == doctest::Approx(0.4).epsilon(1e-14));

    AlphaGrid single{0.35, 0.35, 0.05};
    CHECK(single.values() == std::vector<double>{0.35});

    AlphaGrid bad;
    bad.step = 0.0;
    CHECK_THROWS_AS(bad.values(), std::invalid_argument);
    bad = AlphaGrid{0.5, 0.2, 0.1};  // max below min
    CHECK_THROWS_AS(bad.values(), std::invalid_argument);
    bad = AlphaGrid{0.0, 0.2, 0.1};  // alpha^2 = 0 is not a signal
    CHECK_THROWS_AS(bad.values(), std::invalid_argument);
}

TEST_CASE("photon-number optimization scans the grid it is given") {
    ProtocolConfig cfg = config_at(15.0, 0.01, 1.0, 0.0, 0.5);
    cfg.n_trunc = 8;
    cfg.y_nodes = 1;
    cfg.m_grid = 16;
    cfg.scheme = Scheme::RR;

    AlphaGrid grid{0.3, 0.4, 0.05};
    const OptimizePair opt = optimize_photon_number_both(cfg, grid);
    CHECK(!opt.rr.all_zero);
    for (double a_sq : grid.values()) {
        ProtocolConfig c = cfg;
        c.signal.alpha = std::sqrt(a_sq);
        const RatePair pair = secret_key_rate_both(c);
        CHECK(opt.rr.point.rate >= pair.rr.rate);
        CHECK(opt.dr.point.rate >= pair.dr.rate);
        if (a_sq == opt.rr.alpha_sq) CHECK(opt.rr.point.rate == pair.rr.rate);
    }

    // A singleton grid is just the plain rate under another name.
    const OptimizeResult one = optimize_photon_number(cfg, AlphaGrid{0.35, 0.35, 0.1});
    ProtocolConfig c = cfg;
    c.signal.alpha = std::sqrt(0.35);
    CHECK(one.alpha_sq == 0.35);
    CHECK(one.point.rate == secret_key_rate(c).rate);
}

TEST_CASE("optimization reports when every candidate rate is zero") {
    ProtocolConfig cfg = config_at(100.0, 0.01, 1.0, 0.0, 0.5);
    cfg.n_trunc = 8;
    cfg.y_nodes = 1;
    cfg.m_grid = 16;
    cfg.scheme = Scheme::DR;
    const OptimizeResult opt = optimize_photon_number(cfg, AlphaGrid{0.05, 0.1, 0.05});
    CHECK(opt.all_zero);
    CHECK(opt.point.rate == 0.0);
    CHECK(opt.alpha_sq == 0.05);  // ties keep the smallest candidate
}

TEST_CASE("distance sweep rows compose back to the template totals") {
    ProtocolConfig base;
    base.link = LinkModel::make({0.5, 0.02}, {0.9, 0.01});
    base.signal.alpha = std::sqrt(0.5);
    base.n_trunc = 8;
    base.y_nodes = 11;
    base.m_grid = 16;
    base.threads = 1;

    SweepSpec spec;
    spec.distances_km = {10.0, 20.0};
    spec.xi2_fractions = {0.0, 0.5};

    const std::vector<SweepRow> rows = sweep_distance(base, spec);
    REQUIRE(rows.size() == 8);

    const double xi_total = compose_channels(base.link).xi;
    for (const SweepRow& row : rows) {
        CHECK(row.ok);
        CHECK(row.error.empty());
        // the row echoes alpha squared back, so the tiny sqrt round trip shows
        CHECK(row.alpha_sq == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(row.link.detector.eta == 0.9);
        CHECK(row.link.channel.eta ==
              doctest::Approx(distance_to_transmission(row.distance_km, 0.2))
                  .epsilon(1e-14));
        CHECK(row.link.detector.xi ==
              doctest::Approx(row.xi2_fraction * xi_total).epsilon(1e-14));
        CHECK(compose_channels(row.link).xi == doctest::Approx(xi_total).epsilon(1e-12));
    }

    // Grouping: scheme, then fraction, then distance, all in input order.
    const Scheme want_scheme[] = {Scheme::DR, Scheme::DR, Scheme::DR, Scheme::DR,
                                  Scheme::RR, Scheme::RR, Scheme::RR, Scheme::RR};
    const double want_frac[] = {0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 0.5};
    const double want_dist[] = {10.0, 20.0, 10.0, 20.0, 10.0, 20.0, 10.0, 20.0};
    for (int i = 0; i < 8; ++i) {
        CHECK(rows[i].scheme == want_scheme[i]);
        CHECK(rows[i].xi2_fraction == want_frac[i]);
        CHECK(rows[i].distance_km == want_dist[i]);
    }

    auto rate_at = [&](Scheme s, double frac, double dist) {
        for (const SweepRow& row : rows)
            if (row.scheme == s && row.xi2_fraction == frac && row.distance_km == dist)
                return row.point.rate;
        FAIL("missing row");
        return 0.0;
    };
    for (Scheme s : {Scheme::DR, Scheme::RR}) {
        // Rates fall with distance ...
        CHECK(rate_at(s, 0.0, 10.0) >= rate_at(s, 0.0, 20.0) - 1e-12);
        CHECK(rate_at(s, 0.5, 10.0) >= rate_at(s, 0.5, 20.0) - 1e-12);
        // ... and moving noise behind the detector can only help.
        CHECK(rate_at(s, 0.5, 10.0) >= rate_at(s, 0.0, 10.0) - 1e-12);
        CHECK(rate_at(s, 0.5, 20.0) >= rate_at(s, 0.0, 20.0) - 1e-12);
    }
    for (double frac : {0.0, 0.5})
        for (double dist : {10.0, 20.0})
            CHECK(rate_at(Scheme::RR, frac, dist) >= rate_at(Scheme::DR, frac, dist) - 1e-12);

    SweepSpec empty;
    CHECK_THROWS_AS(sweep_distance(base, empty), std::invalid_argument);
}

TEST_CASE("convergence check refines all three knobs and judges honestly") {
    ProtocolConfig cfg = config_at(10.0, 0.0, 1.0, 0.0, 0.5);
    cfg.n_trunc = 6;
    cfg.y_nodes = 11;
    cfg.m_grid = 16;

    const ConvergenceReport report = convergence_check(cfg);
    CHECK(report.refined.config.n_trunc == cfg.n_trunc + 4);
    CHECK(report.refined.config.y_nodes == cfg.y_nodes + 10);
    CHECK(report.refined.config.m_grid == 2 * cfg.m_grid);
    CHECK(report.converged);
    CHECK(report.rel_change < 1e-3);
    CHECK(report.base.rate > 0.0);

    // A single photon-number state cannot represent the attacker: the
    // refinement moves the rate and the verdict must say so.
    ProtocolConfig crude = config_at(10.0, 0.01, 1.0, 0.0, 0.5);
    crude.n_trunc = 1;
    crude.y_nodes = 11;
    crude.m_grid = 16;
    const ConvergenceReport bad = convergence_check(crude);
    CHECK(!bad.converged);
    CHECK(bad.rel_change > 1e-3);
}
