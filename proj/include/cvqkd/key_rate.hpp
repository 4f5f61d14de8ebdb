#pragma once

// Postselected key-rate integral, photon-number optimization, distance
// sweeps, and numerical-convergence certification.

#include <string>
#include <vector>

#include "cvqkd/eve_information.hpp"

namespace cvqkd {

struct ProtocolConfig {
    LinkModel link;
    ProtocolSignal signal;
    Scheme scheme = Scheme::DR;
    int n_trunc = 12;            // photon-number cutoff per mode
    int y_nodes = 21;            // detector-noise quadrature nodes (odd)
    int m_grid = 32;             // outcome-integration nodes, in panels of 8
    double m_max = 0.0;          // integration cutoff; <= 0 selects the default
    int threads = 0;             // parallel slices; 0 = hardware concurrency
    bool parity_shortcut = true;
    bool apply_sifting = false;  // halve the rate for basis sifting
};

// sqrt(eta) alpha + 6 sqrt((1+xi)/4): past this the outcome density has
// negligible mass (< 1e-8 of the total).
double default_m_max(const LinkModel& link, const ProtocolSignal& signal);

struct KeyRatePoint {
    double rate = 0.0;                   // bits per postselected-basis pulse
    double postselection_fraction = 0.0; // probability mass of kept outcomes
    bool converged = true;               // numerical-health verdict, see stats
    ProtocolConfig config;               // echo of the settings used
    SpectrumStats stats;
};

// One slice of the integrand at |m|: error rate, mutual information, and
// both schemes' Holevo bounds (they share all the heavy work).
struct SliceResult {
    double m_abs = 0.0;
    double eps = 0.0;
    double i_ab = 0.0;
    double chi_dr = 0.0;
    double chi_rr = 0.0;
    SpectrumStats stats;
};
SliceResult compute_slice(double m_abs, const ProtocolConfig& cfg);

// [P(m|alpha) + P(-m|alpha)] max(I_AB - chi, 0) at m > 0 for cfg.scheme; the
// bracket depends on m only through |m|, which folds the full-line integral
// onto the positive axis.
double key_rate_integrand(double m, const ProtocolConfig& cfg);

// Both schemes from one pass (the slices are shared); secret_key_rate
// returns the cfg.scheme half.
struct RatePair {
    KeyRatePoint dr, rr;
};
RatePair secret_key_rate_both(const ProtocolConfig& cfg);
KeyRatePoint secret_key_rate(const ProtocolConfig& cfg);

struct AlphaGrid {
    double min_sq = 0.05;
    double max_sq = 2.0;
    double step = 0.05;

    std::vector<double> values() const;  // ascending alpha^2 grid
};

struct OptimizeResult {
    double alpha_sq = 0.0;
    KeyRatePoint point;
    bool all_zero = false;  // every scanned rate was 0
};
struct OptimizePair {
    OptimizeResult dr, rr;
};

// Exhaustive ascending scan; ties keep the smaller alpha^2.
OptimizePair optimize_photon_number_both(const ProtocolConfig& cfg, const AlphaGrid& grid);
OptimizeResult optimize_photon_number(const ProtocolConfig& cfg, const AlphaGrid& grid);

struct SweepSpec {
    std::vector<double> distances_km;
    std::vector<double> xi2_fractions;            // of the composed total xi
    std::vector<Scheme> schemes = {Scheme::DR, Scheme::RR};
    double loss_db_per_km = 0.2;
    bool optimize_alpha = false;
    AlphaGrid alpha_grid;
};

struct SweepRow {
    double distance_km = 0.0;
    double xi2_fraction = 0.0;
    Scheme scheme = Scheme::DR;
    LinkModel link;
    double alpha_sq = 0.0;
    KeyRatePoint point;
    bool ok = true;
    std::string error;
};

// For each (fraction, distance): eta1 from the distance, xi2 = fraction*xi,
// xi1 = (xi - xi2)/eta2, so every row composes back to the template's total
// (eta(d), xi).  Rows come out grouped by scheme, then fraction, then
// distance, in input order.
std::vector<SweepRow> sweep_distance(const ProtocolConfig& base, const SweepSpec& spec);

struct ConvergenceReport {
    KeyRatePoint base;     // at (n_trunc, y_nodes, m_grid)
    KeyRatePoint refined;  // at (n_trunc+4, y_nodes+10, 2*m_grid)
    double rel_change = 0.0;
    bool converged = false;
};

// Converged iff the refinement moves the rate by < 1e-3 relative (or < 1e-9
// absolute when both rates are below 1e-6) and both points are healthy.
ConvergenceReport convergence_check(const ProtocolConfig& cfg);

}  // namespace cvqkd
