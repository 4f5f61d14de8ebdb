#pragma once

// CSV reporting and the command layer shared by the CLI and the tests:
// run_command drives a full rate/sweep/optimize/converge run from a parsed
// config and streams canonical CSV, so the binary is a thin wrapper.

#include <iosfwd>
#include <string>

#include "cvqkd/run_config.hpp"

namespace cvqkd {

// One CSV record.  Column order is fixed by csv_header().
struct ResultRow {
    double distance_km = 0.0;
    double eta1 = 0.0;
    double xi1 = 0.0;
    double eta2 = 0.0;
    double xi2 = 0.0;
    double alpha_sq = 0.0;
    Scheme scheme = Scheme::DR;
    double key_rate = 0.0;
    double postselection_fraction = 0.0;
    int n_trunc = 0;
    int y_nodes = 0;
    int m_grid = 0;
    bool converged = false;
};

std::string csv_header();
std::string to_csv(const ResultRow& row);  // one line, %.10g numeric fields

ResultRow make_row(double distance_km, const LinkModel& link, double alpha_sq, Scheme scheme,
                   const KeyRatePoint& point);
ResultRow make_row(const SweepRow& row);

// command is one of "rate", "sweep", "optimize", "converge".  CSV goes to
// csv_out, human-readable notes to diag.  Returns a process exit status:
// 0 on success, 1 when any sweep row failed or a convergence check did not
// pass.  Configuration and engine errors propagate as exceptions.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& csv_out,
                std::ostream& diag);

// Script plotting key_rate against distance from a CSV written by
// run_command, one curve per (scheme, xi2 fraction) in cfg.
std::string gnuplot_script(const RunConfig& cfg, const std::string& csv_path);

}  // namespace cvqkd
