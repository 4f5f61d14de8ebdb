#pragma once

// INI-style run configuration: parsing, validation, canonical serialization,
// and conversion into the engine's structs.

#include <optional>
#include <string>
#include <vector>

#include "cvqkd/key_rate.hpp"

namespace cvqkd {

// Every key has a default, so an empty file is a valid config.  distance_km
// and eta1 are mutually exclusive ways to fix the line transmission; when
// neither is given the default is 25 km.
struct RunConfig {
    // [channel]
    std::optional<double> distance_km;  // line length, km
    std::optional<double> eta1;         // line transmission, overrides distance
    double loss_db_per_km = 0.2;
    double xi1 = 0.01;  // line excess noise (shot-noise units)

    // [detector]
    double eta2 = 1.0;  // detection efficiency (not attributed to the adversary)
    double xi2 = 0.0;   // electronic noise

    // [signal]
    double alpha_sq = 0.5;  // mean photon number of each coherent state
    double f = 1.0;         // error-correction efficiency >= 1 (1 = ideal)

    // [protocol]
    Scheme scheme = Scheme::DR;
    bool sifting = false;

    // [numerics]
    int n_trunc = 12;
    int y_nodes = 21;
    int m_grid = 32;
    double m_max = 0.0;  // 0 = automatic
    int threads = 0;     // 0 = hardware concurrency
    bool parity_shortcut = true;

    // [sweep]
    std::vector<double> sweep_distances = {5,  10, 15, 20, 25, 30, 35, 40,
                                           45, 50, 55, 60, 65, 70, 75, 80};
    std::vector<double> xi2_fractions = {0.0, 0.3, 0.5, 0.8};
    std::optional<double> xi_total;  // composed excess noise; default from the channel keys
    std::vector<Scheme> sweep_schemes = {Scheme::DR, Scheme::RR};
    bool optimize_alpha = false;

    // [optimize]
    AlphaGrid alpha_grid;

    // [output]
    std::string out_path;
    bool gnuplot = false;
};

// Throws std::invalid_argument naming the offending "section.key" for unknown
// keys, duplicates, malformed values, and out-of-range settings.
RunConfig parse_config(const std::string& text);

// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& cfg);

// Distance implied by the channel keys (the explicit one, the one derived
// from eta1, or the 25 km default).
double resolved_distance_km(const RunConfig& cfg);

// Builds the two-stage link.  A 0 km line would be lossless, which the
// security model cannot represent; it is clamped to eta1 = 1 - 1e-9 with a
// warning on stderr.
LinkModel make_link(const RunConfig& cfg);

ProtocolConfig to_protocol_config(const RunConfig& cfg);
SweepSpec to_sweep_spec(const RunConfig& cfg);

}  // namespace cvqkd
