#include "cvqkd/quadratic_form.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cvqkd {

namespace {

// Dense polynomial in four variables, coefficients indexed by per-variable
// degrees up to a shared cap.  Sizes stay tiny (cap <= n1+n2+n3+n4), so a
// dense array with zero-skipping multiplication is plenty.
class Poly4 {
  public:
    explicit Poly4(int cap) : cap_(cap), c_((cap + 1) * (cap + 1) * (cap + 1) * (cap + 1), 0.0) {}

    double& at(int i, int j, int k, int l) {
        return c_[((i * (cap_ + 1) + j) * (cap_ + 1) + k) * (cap_ + 1) + l];
    }
    double at(int i, int j, int k, int l) const {
        return c_[((i * (cap_ + 1) + j) * (cap_ + 1) + k) * (cap_ + 1) + l];
    }
    int cap() const { return cap_; }

    // this * (a0 + a.y), in place via a temporary.
    Poly4 times_linear(const Eigen::Vector4d& a, double a0) const {
        Poly4 out(cap_);
        for (int i = 0; i <= cap_; ++i)
            for (int j = 0; j <= cap_; ++j)
                for (int k = 0; k <= cap_; ++k)
                    for (int l = 0; l <= cap_; ++l) {
                        const double v = at(i, j, k, l);
                        if (v == 0.0) continue;
                        out.at(i, j, k, l) += a0 * v;
                        if (i < cap_) out.at(i + 1, j, k, l) += a(0) * v;
                        if (j < cap_) out.at(i, j + 1, k, l) += a(1) * v;
                        if (k < cap_) out.at(i, j, k + 1, l) += a(2) * v;
                        if (l < cap_) out.at(i, j, k, l + 1) += a(3) * v;
                    }
        return out;
    }

    Poly4 times(const Poly4& other) const {
        Poly4 out(cap_);
        for (int i = 0; i <= cap_; ++i)
            for (int j = 0; j <= cap_; ++j)
                for (int k = 0; k <= cap_; ++k)
                    for (int l = 0; l <= cap_; ++l) {
                        const double v = at(i, j, k, l);
                        if (v == 0.0) continue;
                        for (int p = 0; p + i <= cap_; ++p)
                            for (int q = 0; q + j <= cap_; ++q)
                                for (int r = 0; r + k <= cap_; ++r)
                                    for (int s = 0; s + l <= cap_; ++s) {
                                        const double w = other.at(p, q, r, s);
                                        if (w == 0.0) continue;
                                        out.at(i + p, j + q, k + r, l + s) += v * w;
                                    }
                    }
        return out;
    }

  private:
    int cap_;
    std::vector<double> c_;
};

// H_n evaluated at the linear form a0 + a.y, as a Poly4.
Poly4 hermite_of_linear(int n, const Eigen::Vector4d& a, double a0, int cap) {
    Poly4 hm(cap);
    hm.at(0, 0, 0, 0) = 1.0;  // H_0
    if (n == 0) return hm;
    Poly4 h = hm.times_linear(2.0 * a, 2.0 * a0);  // H_1 = 2x
    for (int k = 1; k < n; ++k) {
        Poly4 next = h.times_linear(2.0 * a, 2.0 * a0);
        for (int i = 0; i <= cap; ++i)
            for (int j = 0; j <= cap; ++j)
                for (int kk = 0; kk <= cap; ++kk)
                    for (int l = 0; l <= cap; ++l)
                        next.at(i, j, kk, l) -= 2.0 * k * hm.at(i, j, kk, l);
        hm = h;
        h = next;
    }
    return h;
}

// int y^n exp(-y^2) dy = sqrt(pi) (n-1)!! / 2^(n/2) for even n, 0 for odd.
std::vector<double> gaussian_moments(int cap) {
    std::vector<double> mu(cap + 1, 0.0);
    mu[0] = std::sqrt(M_PI);
    for (int n = 2; n <= cap; n += 2) mu[n] = mu[n - 2] * (n - 1) / 2.0;
    return mu;
}

}  // namespace

QuadraticForm4D element_quadratic_form(double s, double m, const LinkModel& link) {
    const double e1 = link.channel.eta;
    const double e2 = link.detector.eta;
    if (!(e1 < 1.0))
        throw std::invalid_argument("element_quadratic_form: channel transmission must be < 1");
    if (!(e2 < 1.0))
        throw std::invalid_argument(
            "element_quadratic_form: requires detector loss (eta2 < 1); "
            "use the node-decomposition path for the lossless-detector limit");
    const double v1 = link.v1;
    const double vp = v1 + 1.0 / v1;
    const double vm = v1 - 1.0 / v1;
    const double u = link.v2 + 1.0 / link.v2;

    QuadraticForm4D qf;
    qf.big_p = vp * (1.0 - e1) / e2 + 2.0 * e1 / e2 + 4.0 / (u * (1.0 - e2));
    qf.p = -0.5 * vm * std::sqrt((1.0 - e1) / e2);
    qf.q = (1.0 - vp / 2.0) * std::sqrt(e1 * (1.0 - e1) / e2);
    qf.r = -2.0 * std::sqrt(e1 / e2) * s - 4.0 * m / (u * (1.0 - e2));

    const double a1 = 1.0 - qf.p * qf.p / qf.big_p + vp / 2.0;
    const double a2 = 1.0 - qf.q * qf.q / qf.big_p + (1.0 - e1) + e1 * vp / 2.0;
    const double a3 = -qf.p * qf.q / qf.big_p + 0.5 * std::sqrt(e1) * vm;
    const double a4 = -qf.p * qf.p / qf.big_p;
    const double a5 = -qf.q * qf.q / qf.big_p;
    const double a6 = -qf.p * qf.q / qf.big_p;
    qf.a << a1, a3, a4, a6,
            a3, a2, a6, a5,
            a4, a6, a1, a3,
            a6, a5, a3, a2;
    const double b1 = qf.p * qf.r / qf.big_p;
    const double b2 = qf.q * qf.r / qf.big_p + std::sqrt(1.0 - e1) * s;
    qf.b << b1, b2, b1, b2;
    qf.c = -4.0 * m * m / (u * (1.0 - e2)) + qf.r * qf.r / qf.big_p - 2.0 * s * s;
    return qf;
}

double matrix_element_from_form(const QuadraticForm4D& qf, int n1, int n2, int n3,
                                int n4, const LinkModel& link) {
    if (n1 < 0 || n2 < 0 || n3 < 0 || n4 < 0)
        throw std::invalid_argument("matrix_element_from_form: indices must be >= 0");
    const double e2 = link.detector.eta;
    const double u = link.v2 + 1.0 / link.v2;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(qf.a);
    const Eigen::Vector4d evals = es.eigenvalues();
    if (!(evals.minCoeff() > 0.0))
        throw std::invalid_argument("matrix_element_from_form: form matrix not positive definite");
    const Eigen::Matrix4d q = es.eigenvectors();
    const Eigen::Matrix4d a_invsqrt =
        q * evals.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
    const Eigen::Matrix4d a_inv = q * evals.cwiseInverse().asDiagonal() * q.transpose();
    const Eigen::Vector4d shift = a_inv * qf.b;
    const double c_shifted = qf.c + qf.b.dot(shift);

    // Scalar prefactor: number-state normalizations, the noise-average
    // normalization, the two Gaussian eliminations, the completed square,
    // and the Jacobian of y = A^(1/2) x - A^(-1/2) b.
    double pref = (2.0 / M_PI) * std::sqrt(4.0 / (M_PI * u)) *
                  std::sqrt(8.0 / (M_PI * M_PI * qf.big_p * e2 * (1.0 - e2)));
    pref *= std::exp(c_shifted) / std::sqrt(evals.prod());

    const int cap = n1 + n2 + n3 + n4;
    const std::array<int, 4> order = {n1, n2, n3, n4};
    Poly4 poly(cap);
    poly.at(0, 0, 0, 0) = 1.0;
    for (int dim = 0; dim < 4; ++dim) {
        // Argument of this factor: sqrt(2) x_dim as a linear form in y.
        const Eigen::Vector4d lin = std::sqrt(2.0) * a_invsqrt.row(dim).transpose();
        const double lin0 = std::sqrt(2.0) * shift(dim);
        poly = poly.times(hermite_of_linear(order[dim], lin, lin0, cap));
    }

    const std::vector<double> mu = gaussian_moments(cap);
    double integral = 0.0;
    for (int i = 0; i <= cap; ++i)
        for (int j = 0; j <= cap; ++j)
            for (int k = 0; k <= cap; ++k)
                for (int l = 0; l <= cap; ++l) {
                    const double v = poly.at(i, j, k, l);
                    if (v == 0.0) continue;
                    integral += v * mu[i] * mu[j] * mu[k] * mu[l];
                }

    double norm = 1.0;
    for (int n : order) {
        for (int kk = 1; kk <= n; ++kk) norm *= 2.0 * kk;  // 2^n n!
    }
    return pref * integral / std::sqrt(norm);
}

}  // namespace cvqkd
