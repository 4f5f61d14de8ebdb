#pragma once

// Per-|m| conditional ensembles of the attacker's states, the reconciliation
// mixtures for both key-mapping directions, and the Holevo bound via real
// symmetric eigendecomposition.

#include <Eigen/Dense>
#include <optional>

#include "cvqkd/channel_model.hpp"
#include "cvqkd/fock_gaussian.hpp"

namespace cvqkd {

enum class Scheme { DR, RR };

const char* scheme_name(Scheme s);

// Extremes of the numerical-health quantities observed while building and
// diagonalizing density matrices.  Merged across slices so a whole run can
// certify its spectra in one place.
struct SpectrumStats {
    double min_eigenvalue = 1.0;        // most negative normalized eigenvalue seen
    double max_trace_deviation = 0.0;   // max |sum(spectrum) - 1|
    double max_asymmetry = 0.0;         // max |a_ij - a_ji| over dense matrices
    double chi_min = 1.0;               // raw Holevo extremes, before clamping
    double chi_max = 0.0;
    long matrices = 0;                  // density matrices checked
    long chi_monotonicity_breaks = 0;   // diagnostic counter, see key_rate

    void absorb_spectrum(const Eigen::VectorXd& eigenvalues);
    void absorb_chi(double chi);
    void merge(const SpectrumStats& other);
    bool healthy() const;  // within the floors used by the validity suite
};

// The four normalized conditional states at a slice |m|: omega[i][j] is the
// state given Alice's bit i (sent displacement (-1)^i alpha) and Bob's bit j
// (outcome sign (-1)^j), plus the slice error rate.
struct ConditionalEnsemble {
    double m_abs = 0.0;
    double eps = 0.0;
    FockMatrix omega00, omega01, omega10, omega11;

    // Pure-state factorization retained by the parity-shortcut builder:
    // columns already scaled by sqrt(weight), so omega00 =
    // c_plus c_plus^T / trace_plus and omega01 = c_minus c_minus^T /
    // trace_minus, with the bit-1 states given by parity sign flips.
    // Entropy code uses this to diagonalize small Gram matrices instead of
    // the full operators; absent when the debug builder made all four
    // states independently.
    struct Factors {
        Eigen::MatrixXd c_plus;
        Eigen::MatrixXd c_minus;
        double trace_plus = 0.0;
        double trace_minus = 0.0;
    };
    std::optional<Factors> factors;
    SpectrumStats stats;
};

struct SliceOptions {
    bool parity_shortcut = true;  // derive omega11/omega10 by sign flips
};

// Build the ensemble at |m| > 0.  The shortcut builder computes the two
// (alpha, +/-|m|) states and obtains the (-alpha, ...) pair by parity
// conjugation, which is exact for this family; the debug path builds all
// four from scratch.
ConditionalEnsemble sliced_states(double m_abs, const ProtocolSignal& signal,
                                  const LinkModel& link, int n_trunc, int y_nodes,
                                  const SliceOptions& opts = {});

// Overload sharing a prebuilt noise rule across slices.
ConditionalEnsemble sliced_states(double m_abs, const ProtocolSignal& signal,
                                  const LinkModel& link, int n_trunc,
                                  const YQuadrature& rule, const SliceOptions& opts = {});

struct Mixtures {
    FockMatrix rho0, rho1, rho_avg;
};

// The attacker's mixtures conditioned on the reference bit: for DR the bit is
// Alice's (her states mixed over Bob's error), for RR it is Bob's.
Mixtures reconciliation_mixtures(const ConditionalEnsemble& ens, Scheme scheme);

// Eigendecompose and sum -lambda log2 lambda.  Nonpositive eigenvalues
// contribute zero (the summand is continuous through 0); below -1e-6 is a
// numerical-validity error.
double von_neumann_entropy(const FockMatrix& rho);

// chi = S(rho_avg) - S(rho0)/2 - S(rho1)/2 for the given scheme, from the
// dense mixtures.  Computes both conditional entropies and verifies they
// agree (they must, by parity covariance).
double holevo(const ConditionalEnsemble& ens, Scheme scheme);

// Both schemes' chi from one set of eigendecompositions, using the factored
// form when available (the mixtures of the two schemes share their average
// and, by parity, their conditional spectra).  Raw values are recorded in
// stats and then clamped into [0, 1] at the stated floors.
struct HolevoPair {
    double chi_dr = 0.0;
    double chi_rr = 0.0;
    SpectrumStats stats;
};
HolevoPair holevo_both(const ConditionalEnsemble& ens);

}  // namespace cvqkd
