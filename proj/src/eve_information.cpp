#include "cvqkd/eve_information.hpp"

#include <cmath>
#include <stdexcept>

namespace cvqkd {

const char* scheme_name(Scheme s) { return s == Scheme::DR ? "dr" : "rr"; }

namespace {

// Shared clamp policy: eigenvalues in [-1e-6, 0] contribute exactly zero;
// anything below -1e-6 is a genuine numerical failure.  Positive eigenvalues
// contribute however tiny: -x log2 x is continuous through 0, and a hard
// cutoff would make the entropy jump by ~|cut log2 cut| whenever a tail
// eigenvalue drifts across it, which the m-integration would then see as
// noise on its integrand.
double entropy_from_spectrum(const Eigen::VectorXd& lam) {
    double s = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
        const double x = lam(i);
        if (x < -1e-6)
            throw std::runtime_error("von_neumann_entropy: eigenvalue below -1e-6");
        if (x <= 0.0) continue;
        s -= x * std::log2(x);
    }
    return s;
}

Eigen::VectorXd spectrum_of(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

FockMatrix normalized(const FockMatrix& raw, double trace) {
    FockMatrix out;
    out.n_trunc = raw.n_trunc;
    out.entries = raw.entries / trace;
    return out;
}

void check_dense_state(const FockMatrix& rho, SpectrumStats& stats) {
    stats.max_asymmetry = std::max(stats.max_asymmetry, max_asymmetry(rho));
    stats.max_trace_deviation =
        std::max(stats.max_trace_deviation, std::abs(rho.trace() - 1.0));
}

}  // namespace

void SpectrumStats::absorb_spectrum(const Eigen::VectorXd& eigenvalues) {
    min_eigenvalue = std::min(min_eigenvalue, eigenvalues.minCoeff());
    max_trace_deviation = std::max(max_trace_deviation, std::abs(eigenvalues.sum() - 1.0));
    ++matrices;
}

void SpectrumStats::absorb_chi(double chi) {
    chi_min = std::min(chi_min, chi);
    chi_max = std::max(chi_max, chi);
}

void SpectrumStats::merge(const SpectrumStats& other) {
    min_eigenvalue = std::min(min_eigenvalue, other.min_eigenvalue);
    max_trace_deviation = std::max(max_trace_deviation, other.max_trace_deviation);
    max_asymmetry = std::max(max_asymmetry, other.max_asymmetry);
    chi_min = std::min(chi_min, other.chi_min);
    chi_max = std::max(chi_max, other.chi_max);
    matrices += other.matrices;
    chi_monotonicity_breaks += other.chi_monotonicity_breaks;
}

bool SpectrumStats::healthy() const {
    return min_eigenvalue >= -1e-8 && max_trace_deviation <= 1e-8 &&
           max_asymmetry <= 1e-10 && chi_min >= -1e-9 && chi_max <= 1.0 + 1e-9;
}

ConditionalEnsemble sliced_states(double m_abs, const ProtocolSignal& signal,
                                  const LinkModel& link, int n_trunc, int y_nodes,
                                  const SliceOptions& opts) {
    return sliced_states(m_abs, signal, link, n_trunc,
                         detector_noise_nodes(link, y_nodes), opts);
}

ConditionalEnsemble sliced_states(double m_abs, const ProtocolSignal& signal,
                                  const LinkModel& link, int n_trunc,
                                  const YQuadrature& rule, const SliceOptions& opts) {
    if (!(m_abs > 0.0))
        throw std::invalid_argument(
            "sliced_states: |m| must be > 0 (the zero slice carries no key and "
            "must be excluded from integration grids)");
    ConditionalEnsemble ens;
    ens.m_abs = m_abs;
    ens.eps = bit_error_rate(m_abs, signal.alpha, compose_channels(link));

    const double alpha = signal.alpha;
    if (opts.parity_shortcut) {
        const NodeVectors plus = eve_state_vectors(alpha, m_abs, link, n_trunc, rule);
        const NodeVectors minus = eve_state_vectors(alpha, -m_abs, link, n_trunc, rule);
        if (!(plus.trace > 1e-300) || !(minus.trace > 1e-300))
            throw std::runtime_error("sliced_states: state trace underflow");
        ens.omega00 = normalized(plus.dense(), plus.trace);
        ens.omega01 = normalized(minus.dense(), minus.trace);
        // The (-alpha, -m) and (-alpha, +m) states are parity conjugates of
        // the two above: flipping the signs of S, m, and the noise node
        // negates the linear part of the wavepacket only, which in the
        // number basis is exactly the parity sign pattern; the node set is
        // symmetric, so the mixture maps onto itself.
        ens.omega11 = parity_flipped(ens.omega00);
        ens.omega10 = parity_flipped(ens.omega01);

        ConditionalEnsemble::Factors f;
        f.c_plus = plus.columns * plus.weights.cwiseSqrt().asDiagonal();
        f.c_minus = minus.columns * minus.weights.cwiseSqrt().asDiagonal();
        f.trace_plus = plus.trace;
        f.trace_minus = minus.trace;
        // Conditional-state spectra from the small Gram matrices: same
        // nonzero eigenvalues as the dense operators.
        ens.stats.absorb_spectrum(
            spectrum_of(f.c_plus.transpose() * f.c_plus / f.trace_plus));
        ens.stats.absorb_spectrum(
            spectrum_of(f.c_minus.transpose() * f.c_minus / f.trace_minus));
        ens.factors = std::move(f);
    } else {
        // Debug path: all four states from scratch, no parity assumptions.
        auto build = [&](double s, double m) {
            const NodeVectors nv = eve_state_vectors(s, m, link, n_trunc, rule);
            if (!(nv.trace > 1e-300))
                throw std::runtime_error("sliced_states: state trace underflow");
            FockMatrix w = normalized(nv.dense(), nv.trace);
            ens.stats.absorb_spectrum(spectrum_of(w.entries));
            return w;
        };
        ens.omega00 = build(alpha, m_abs);
        ens.omega01 = build(alpha, -m_abs);
        ens.omega10 = build(-alpha, m_abs);
        ens.omega11 = build(-alpha, -m_abs);
    }
    check_dense_state(ens.omega00, ens.stats);
    check_dense_state(ens.omega01, ens.stats);
    check_dense_state(ens.omega10, ens.stats);
    check_dense_state(ens.omega11, ens.stats);
    return ens;
}

Mixtures reconciliation_mixtures(const ConditionalEnsemble& ens, Scheme scheme) {
    const double eps = ens.eps;
    Mixtures mix;
    mix.rho0.n_trunc = mix.rho1.n_trunc = mix.rho_avg.n_trunc = ens.omega00.n_trunc;
    if (scheme == Scheme::DR) {
        mix.rho0.entries = (1.0 - eps) * ens.omega00.entries + eps * ens.omega01.entries;
        mix.rho1.entries = (1.0 - eps) * ens.omega11.entries + eps * ens.omega10.entries;
    } else {
        mix.rho0.entries = (1.0 - eps) * ens.omega00.entries + eps * ens.omega10.entries;
        mix.rho1.entries = (1.0 - eps) * ens.omega11.entries + eps * ens.omega01.entries;
    }
    mix.rho_avg.entries = 0.5 * (mix.rho0.entries + mix.rho1.entries);
    return mix;
}

double von_neumann_entropy(const FockMatrix& rho) {
    return entropy_from_spectrum(spectrum_of(rho.entries));
}

double holevo(const ConditionalEnsemble& ens, Scheme scheme) {
    const Mixtures mix = reconciliation_mixtures(ens, scheme);
    const double s0 = von_neumann_entropy(mix.rho0);
    const double s1 = von_neumann_entropy(mix.rho1);
    if (std::abs(s0 - s1) > 1e-6)
        throw std::runtime_error(
            "holevo: conditional entropies disagree beyond 1e-6; parity covariance "
            "is numerically broken");
    return von_neumann_entropy(mix.rho_avg) - 0.5 * (s0 + s1);
}

namespace {

double clamp_chi(double raw, SpectrumStats& stats) {
    stats.absorb_chi(raw);
    return std::min(1.0, std::max(0.0, raw));
}

}  // namespace

HolevoPair holevo_both(const ConditionalEnsemble& ens) {
    HolevoPair out;
    if (!ens.factors) {
        const Mixtures dr = reconciliation_mixtures(ens, Scheme::DR);
        const Mixtures rr = reconciliation_mixtures(ens, Scheme::RR);
        const double s_avg = von_neumann_entropy(dr.rho_avg);
        const double s_dr0 = von_neumann_entropy(dr.rho0);
        const double s_dr1 = von_neumann_entropy(dr.rho1);
        const double s_rr0 = von_neumann_entropy(rr.rho0);
        const double s_rr1 = von_neumann_entropy(rr.rho1);
        if (std::abs(s_dr0 - s_dr1) > 1e-6 || std::abs(s_rr0 - s_rr1) > 1e-6)
            throw std::runtime_error("holevo_both: conditional entropies disagree beyond 1e-6");
        out.chi_dr = clamp_chi(s_avg - 0.5 * (s_dr0 + s_dr1), out.stats);
        out.chi_rr = clamp_chi(s_avg - 0.5 * (s_rr0 + s_rr1), out.stats);
        return out;
    }

    // Factored route: all three distinct mixtures are positive combinations
    // of the same 4k pure vectors, so their nonzero spectra equal those of
    // small Gram matrices.  The bit-1 mixtures are parity conjugates of the
    // bit-0 ones with literally identical Gram matrices, which settles
    // S(rho1) = S(rho0) exactly.
    const auto& f = *ens.factors;
    const double eps = ens.eps;
    const int k = static_cast<int>(f.c_plus.cols());
    const Eigen::VectorXd parity = parity_diagonal(ens.omega00.n_trunc);
    const Eigen::MatrixXd p_minus = parity.asDiagonal() * f.c_minus;

    const Eigen::MatrixXd d1 = f.c_plus.transpose() * f.c_plus;
    const Eigen::MatrixXd d2 = f.c_minus.transpose() * f.c_minus;
    const Eigen::MatrixXd d3 = f.c_plus.transpose() * f.c_minus;
    const Eigen::MatrixXd e1 = f.c_plus.transpose() * (parity.asDiagonal() * f.c_plus);
    const Eigen::MatrixXd e2 = f.c_minus.transpose() * p_minus;
    const Eigen::MatrixXd e3 = f.c_plus.transpose() * p_minus;

    const double ca = (1.0 - eps) / f.trace_plus;   // weight of the c_plus block
    const double cb = eps / f.trace_minus;          // weight of the c_minus block
    const double cab = std::sqrt(ca * cb);

    Eigen::MatrixXd g0(2 * k, 2 * k);
    g0.topLeftCorner(k, k) = ca * d1;
    g0.bottomRightCorner(k, k) = cb * d2;

    // rho0 for DR mixes (alpha, +m) with (alpha, -m): cross block d3.
    g0.topRightCorner(k, k) = cab * d3;
    g0.bottomLeftCorner(k, k) = cab * d3.transpose();
    const Eigen::VectorXd dr0_spec = spectrum_of(g0);
    out.stats.absorb_spectrum(dr0_spec);
    const double s_dr0 = entropy_from_spectrum(dr0_spec);

    // rho0 for RR mixes (alpha, +m) with (-alpha, +m) = parity * (alpha, -m).
    g0.topRightCorner(k, k) = cab * e3;
    g0.bottomLeftCorner(k, k) = cab * e3.transpose();
    const Eigen::VectorXd rr0_spec = spectrum_of(g0);
    out.stats.absorb_spectrum(rr0_spec);
    const double s_rr0 = entropy_from_spectrum(rr0_spec);

    // rho_avg over the four blocks [c+, c-, P c+, P c-] at half weight.
    Eigen::MatrixXd ga(4 * k, 4 * k);
    auto block = [&](int i, int j, const Eigen::MatrixXd& m, double scale) {
        ga.block(i * k, j * k, k, k) = scale * m;
        if (i != j) ga.block(j * k, i * k, k, k) = scale * m.transpose();
    };
    block(0, 0, d1, 0.5 * ca);
    block(1, 1, d2, 0.5 * cb);
    block(2, 2, d1, 0.5 * ca);
    block(3, 3, d2, 0.5 * cb);
    block(0, 1, d3, 0.5 * cab);
    block(2, 3, d3, 0.5 * cab);
    block(0, 2, e1, 0.5 * ca);
    block(1, 3, e2, 0.5 * cb);
    block(0, 3, e3, 0.5 * cab);
    block(1, 2, e3.transpose(), 0.5 * cab);
    const Eigen::VectorXd avg_spec = spectrum_of(ga);
    const double s_avg = entropy_from_spectrum(avg_spec);
    out.stats.absorb_spectrum(avg_spec);

    out.chi_dr = clamp_chi(s_avg - s_dr0, out.stats);
    out.chi_rr = clamp_chi(s_avg - s_rr0, out.stats);
    return out;
}

}  // namespace cvqkd
