#include "cvqkd/fock_gaussian.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cvqkd {

double hermite(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite: order must be >= 0");
    double hm = 1.0;  // H_0
    if (n == 0) return hm;
    double h = 2.0 * x;  // H_1
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * x * h - 2.0 * k * hm;
        hm = h;
        h = next;
    }
    return h;
}

double wavepacket_value(const GaussianWavepacket2D& wp, double x1, double x2) {
    const Eigen::Vector2d x(x1, x2);
    return std::exp(-x.dot(wp.m * x) + 2.0 * x.dot(wp.v) + wp.c0);
}

double wavepacket_overlap(const GaussianWavepacket2D& a, const GaussianWavepacket2D& b) {
    const Eigen::Matrix2d p = a.m + b.m;
    const Eigen::Vector2d v = a.v + b.v;
    const double det = p.determinant();
    if (!(det > 0.0))
        throw std::invalid_argument("wavepacket_overlap: combined form not positive definite");
    return M_PI / std::sqrt(det) *
           std::exp(a.c0 + b.c0 + v.dot(p.inverse() * v));
}

GaussianWavepacket2D wavepacket_from_params(double s, double m, double y,
                                            const LinkModel& link) {
    const double e1 = link.channel.eta;
    const double e2 = link.detector.eta;
    if (!(e1 < 1.0))
        throw std::invalid_argument("wavepacket_from_params: channel transmission must be < 1");
    const double v1 = link.v1;
    const double vp = v1 + 1.0 / v1;
    const double vm = v1 - 1.0 / v1;
    // The outcome enters only through the shifted, rescaled quantity T.  For
    // eta2 = 1 the node y is already the scaled noise variable (see
    // detector_noise_nodes), so the two branches agree in the limit.
    const double t = e2 < 1.0 ? (m + std::sqrt(1.0 - e2) * y) / std::sqrt(e2) : m + y;
    const double r1 = std::sqrt(1.0 - e1);
    const double re1 = std::sqrt(e1);

    GaussianWavepacket2D wp;
    wp.m << vp / 2.0, re1 * vm / 2.0,
            re1 * vm / 2.0, 1.0 - e1 + e1 * vp / 2.0;
    wp.v << r1 * t * vm / 2.0,
            r1 * (s + re1 * t * (vp / 2.0 - 1.0));
    wp.c0 = 0.25 * std::log(8.0 / (M_PI * M_PI * M_PI * e2)) -
            (re1 * t - s) * (re1 * t - s) - (1.0 - e1) * t * t * vp / 2.0;

    // Positive definiteness of the 2x2 form: positive diagonal + determinant.
    const double det = wp.m(0, 0) * wp.m(1, 1) - wp.m(0, 1) * wp.m(1, 0);
    if (!(wp.m(0, 0) > 0.0) || !(det > 0.0))
        throw std::invalid_argument("wavepacket_from_params: quadratic form not positive definite");
    return wp;
}

Eigen::MatrixXd fock_coefficients(const GaussianWavepacket2D& wp, int n_trunc) {
    if (n_trunc < 1) throw std::invalid_argument("fock_coefficients: n_trunc must be >= 1");
    // Integrating the two-mode Hermite generating function against the
    // wavepacket gives closed-form constants (C, R, s) with
    //   sum_n c_n t^n / sqrt(n!) = C exp(t^T R t / 2 + t^T s),
    // from which the grid follows by differentiating the right-hand side:
    //   c_{n+e_i} = (s_i c_n + sum_j R_ij sqrt(n_j) c_{n-e_j}) / sqrt(n_i + 1).
    const Eigen::Matrix2d p = wp.m + Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d pinv = p.inverse();
    const double detp = p.determinant();
    const Eigen::Matrix2d r = 2.0 * pinv - Eigen::Matrix2d::Identity();
    const Eigen::Vector2d s = 2.0 * pinv * wp.v;
    const double logc = 0.5 * std::log(2.0 * M_PI) - 0.5 * std::log(detp) + wp.c0 +
                        wp.v.dot(pinv * wp.v);

    const int n = n_trunc;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g(0, 0) = std::exp(logc);
    auto guard = [](double val, int i1, int i2) {
        if (!std::isfinite(val)) {
            std::ostringstream msg;
            msg << "fock_coefficients: non-finite value at index (" << i1 << ", " << i2 << ")";
            throw std::runtime_error(msg.str());
        }
        return val;
    };
    for (int n2 = 0; n2 + 1 < n; ++n2) {
        double acc = s(1) * g(0, n2);
        if (n2 >= 1) acc += r(1, 1) * std::sqrt(double(n2)) * g(0, n2 - 1);
        g(0, n2 + 1) = guard(acc / std::sqrt(n2 + 1.0), 0, n2 + 1);
    }
    for (int n1 = 0; n1 + 1 < n; ++n1) {
        for (int n2 = 0; n2 < n; ++n2) {
            double acc = s(0) * g(n1, n2);
            if (n1 >= 1) acc += r(0, 0) * std::sqrt(double(n1)) * g(n1 - 1, n2);
            if (n2 >= 1) acc += r(0, 1) * std::sqrt(double(n2)) * g(n1, n2 - 1);
            g(n1 + 1, n2) = guard(acc / std::sqrt(n1 + 1.0), n1 + 1, n2);
        }
    }
    return g;
}

double detector_noise_variance(const LinkModel& link) {
    const double e2 = link.detector.eta;
    if (e2 < 1.0) return (link.v2 + 1.0 / link.v2) / 8.0;
    return link.detector.xi / 4.0;
}

YQuadrature detector_noise_nodes(const LinkModel& link, int k) {
    if (k < 1) throw std::invalid_argument("detector_noise_nodes: need at least one node");
    if (k % 2 == 0)
        throw std::invalid_argument("detector_noise_nodes: node count must be odd");
    const double var = detector_noise_variance(link);
    YQuadrature q;
    if (var == 0.0) {
        q.nodes = {0.0};
        q.weights = {1.0};
        return q;
    }
    QuadratureRule gh = gauss_hermite(k);
    const double scale = std::sqrt(2.0 * var);
    const double norm = 1.0 / std::sqrt(M_PI);
    q.nodes.resize(k);
    q.weights.resize(k);
    for (int i = 0; i < k; ++i) {
        q.nodes[i] = scale * gh.nodes[i];
        q.weights[i] = norm * gh.weights[i];
    }
    return q;
}

FockMatrix parity_flipped(const FockMatrix& rho) {
    const Eigen::VectorXd p = parity_diagonal(rho.n_trunc);
    FockMatrix out;
    out.n_trunc = rho.n_trunc;
    out.entries = p.asDiagonal() * rho.entries * p.asDiagonal();
    return out;
}

double max_asymmetry(const FockMatrix& rho) {
    return (rho.entries - rho.entries.transpose()).cwiseAbs().maxCoeff();
}

Eigen::VectorXd parity_diagonal(int n_trunc) {
    Eigen::VectorXd p(n_trunc * n_trunc);
    for (int n1 = 0; n1 < n_trunc; ++n1)
        for (int n2 = 0; n2 < n_trunc; ++n2)
            p(n1 * n_trunc + n2) = ((n1 + n2) % 2 == 0) ? 1.0 : -1.0;
    return p;
}

FockMatrix NodeVectors::dense() const {
    FockMatrix out;
    out.n_trunc = n_trunc;
    out.entries = columns * weights.asDiagonal() * columns.transpose();
    return out;
}

NodeVectors eve_state_vectors(double s, double m, const LinkModel& link, int n_trunc,
                              const YQuadrature& rule) {
    const int k = static_cast<int>(rule.nodes.size());
    NodeVectors nv;
    nv.n_trunc = n_trunc;
    nv.columns.resize(n_trunc * n_trunc, k);
    nv.weights.resize(k);
    for (int i = 0; i < k; ++i) {
        const Eigen::MatrixXd g =
            fock_coefficients(wavepacket_from_params(s, m, rule.nodes[i], link), n_trunc);
        for (int n1 = 0; n1 < n_trunc; ++n1)
            for (int n2 = 0; n2 < n_trunc; ++n2)
                nv.columns(n1 * n_trunc + n2, i) = g(n1, n2);
        nv.weights(i) = rule.weights[i];
    }
    nv.trace = (nv.columns.colwise().squaredNorm() * nv.weights)(0);
    return nv;
}

std::pair<FockMatrix, double> eve_density_matrix(double s, double m,
                                                 const LinkModel& link,
                                                 int n_trunc, int y_nodes) {
    const YQuadrature rule = detector_noise_nodes(link, y_nodes);
    const NodeVectors nv = eve_state_vectors(s, m, link, n_trunc, rule);
    if (!(nv.trace > 1e-300)) {
        std::ostringstream msg;
        msg << "eve_density_matrix: trace underflow at S = " << s << ", m = " << m;
        throw std::runtime_error(msg.str());
    }
    return {nv.dense(), nv.trace};
}

double trace_closed_form(double s, double m, const LinkModel& link) {
    const ChannelParams total = compose_channels(link);
    const double d = m - std::sqrt(total.eta) * s;
    return std::sqrt(2.0 / M_PI) * std::sqrt(1.0 / (1.0 + total.xi)) *
           std::exp(-2.0 * d * d / (1.0 + total.xi));
}

}  // namespace cvqkd
