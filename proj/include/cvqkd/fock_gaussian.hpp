#pragma once

// Construction of the attacker's conditional two-mode state in a truncated
// photon-number basis.  Two independent computation paths are provided:
//
//  * the production path decomposes the state as a positive mixture of pure
//    Gaussian wavepackets over detector-noise quadrature nodes and expands
//    each wavepacket in the number basis by a generating-function recurrence;
//
//  * the oracle path evaluates single matrix elements directly from a 4D
//    Gaussian quadratic form by Hermite-polynomial expansion and closed-form
//    Gaussian moments (see quadratic_form.hpp).
//
// Mutual agreement of the two paths is the strongest correctness check the
// problem admits, and is enforced by the test suite.

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "cvqkd/channel_model.hpp"
#include "cvqkd/quadrature.hpp"

namespace cvqkd {

// Physicists' Hermite polynomial H_n(x) by the three-term recurrence.
double hermite(int n, double x);

// Real two-mode Gaussian wavefunction over the quadratures (x1, x2) of the
// attacker's modes:  psi(x) = exp(-x^T M x + 2 x^T v + c0).
// c0 is kept in the log domain so long-distance prefactors cannot underflow.
struct GaussianWavepacket2D {
    Eigen::Matrix2d m;  // symmetric positive definite
    Eigen::Vector2d v;
    double c0 = 0.0;
};

double wavepacket_value(const GaussianWavepacket2D& wp, double x1, double x2);

// Closed-form overlap <a|b> of two (real) wavepackets.
double wavepacket_overlap(const GaussianWavepacket2D& a, const GaussianWavepacket2D& b);

// The attacker's conditional pure state for sent displacement S, receiver
// outcome m, and detector-noise node y.  The node parameterization matches
// detector_noise_nodes for the same link: the raw noise quadrature for
// eta2 < 1, or its surviving scaled limit when eta2 = 1.  The quadratic
// coefficient M depends only on the link, never on (S, m, y).
GaussianWavepacket2D wavepacket_from_params(double s, double m, double y,
                                            const LinkModel& link);

// Number-basis coefficients c[n1][n2] = <n1 n2|psi> for n1, n2 < n_trunc,
// via the Gaussian generating-function recurrence.  Throws on non-finite
// intermediate values, naming the failing index.
Eigen::MatrixXd fock_coefficients(const GaussianWavepacket2D& wp, int n_trunc);

// Quadrature over the detector-noise variable that smears the attacker's
// conditional state.  Weights are normalized to sum 1.
struct YQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Variance of the node variable: (V2 + 1/V2)/8 for eta2 < 1 (raw noise
// quadrature), xi2/4 for eta2 = 1 (the finite limit of the scaled variable).
double detector_noise_variance(const LinkModel& link);

// Gauss-Hermite nodes matched to that Gaussian; k must be odd so the parity
// pairing of nodes is exact.  A zero-variance link yields the single node 0.
YQuadrature detector_noise_nodes(const LinkModel& link, int k);

// Dense two-mode operator on the truncated number basis; composite row/col
// index is n1 * n_trunc + n2.
struct FockMatrix {
    int n_trunc = 0;
    Eigen::MatrixXd entries;

    int dim() const { return n_trunc * n_trunc; }
    double trace() const { return entries.trace(); }
};

// Conjugation by the two-mode parity operator (-1)^(n1+n2): flips the sign
// of every element whose row and column parities differ.
FockMatrix parity_flipped(const FockMatrix& rho);

// Largest |a_ij - a_ji|, for symmetry checks.
double max_asymmetry(const FockMatrix& rho);

// Diagonal of the parity operator as a vector over the composite index.
Eigen::VectorXd parity_diagonal(int n_trunc);

// Rank-factored form of the attacker's state: column i holds the number-basis
// coefficient vector of the pure wavepacket at noise node i.  The dense state
// is sum_i w_i col_i col_i^T and its trace is sum_i w_i |col_i|^2 — both exact
// functions of this factorization, which downstream entropy code exploits.
struct NodeVectors {
    int n_trunc = 0;
    Eigen::MatrixXd columns;   // (n_trunc^2) x k
    Eigen::VectorXd weights;   // k, positive, sums to 1
    double trace = 0.0;

    FockMatrix dense() const;
};

NodeVectors eve_state_vectors(double s, double m, const LinkModel& link, int n_trunc,
                              const YQuadrature& rule);

// Unnormalized conditional state and its computed trace (the probability
// density of the outcome).  Throws when the trace underflows.
std::pair<FockMatrix, double> eve_density_matrix(double s, double m,
                                                 const LinkModel& link,
                                                 int n_trunc, int y_nodes);

// Closed form for the same trace:
// sqrt(2/pi) sqrt(1/(1+xi)) exp(-2(m - sqrt(eta) S)^2/(1+xi)) with the
// composed totals (eta, xi); equals quadrature_pdf at those totals.
double trace_closed_form(double s, double m, const LinkModel& link);

}  // namespace cvqkd
