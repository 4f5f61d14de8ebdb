#include "cvqkd/report.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cvqkd {

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

// Composed excess noise the sweep distributes between the two stages: the
// explicit override if given, otherwise what the channel/detector keys imply.
double sweep_total_xi(const RunConfig& cfg) {
    if (cfg.xi_total) return *cfg.xi_total;
    return cfg.xi1 * cfg.eta2 + cfg.xi2;
}

// Sweep template: the per-row links are rebuilt from (distance, fraction), so
// only the composed total and eta2 matter here.  An xi_total override is
// loaded onto the line stage to keep the composition exact.
ProtocolConfig sweep_base(const RunConfig& cfg) {
    ProtocolConfig pc = to_protocol_config(cfg);
    if (cfg.xi_total)
        pc.link = LinkModel::make({pc.link.channel.eta, *cfg.xi_total / cfg.eta2},
                                  {cfg.eta2, 0.0});
    return pc;
}

int emit_sweep(const RunConfig& cfg, bool optimize_alpha, std::ostream& csv_out,
               std::ostream& diag) {
    ProtocolConfig base = sweep_base(cfg);
    SweepSpec spec = to_sweep_spec(cfg);
    spec.optimize_alpha = optimize_alpha || spec.optimize_alpha;

    const std::vector<SweepRow> rows = sweep_distance(base, spec);
    csv_out << csv_header() << "\n";
    int flagged = 0;
    for (const SweepRow& row : rows) {
        csv_out << to_csv(make_row(row)) << "\n";
        if (!row.ok) ++flagged;
    }
    diag << "sweep: " << rows.size() << " rows (" << spec.schemes.size() << " schemes x "
         << spec.xi2_fractions.size() << " noise splits x " << spec.distances_km.size()
         << " distances), total excess noise " << num(sweep_total_xi(cfg)) << "\n";
    if (flagged) diag << "sweep: " << flagged << " rows failed and are flagged in the CSV\n";
    return flagged ? 1 : 0;
}

}  // namespace

std::string csv_header() {
    return "distance_km,eta1,xi1,eta2,xi2,alpha_sq,scheme,key_rate,"
           "postselection_fraction,n_trunc,y_nodes,m_grid,converged";
}

std::string to_csv(const ResultRow& r) {
    std::ostringstream out;
    out << num(r.distance_km) << ',' << num(r.eta1) << ',' << num(r.xi1) << ',' << num(r.eta2)
        << ',' << num(r.xi2) << ',' << num(r.alpha_sq) << ',' << scheme_name(r.scheme) << ','
        << num(r.key_rate) << ',' << num(r.postselection_fraction) << ',' << r.n_trunc << ','
        << r.y_nodes << ',' << r.m_grid << ',' << (r.converged ? "true" : "false");
    return out.str();
}

ResultRow make_row(double distance_km, const LinkModel& link, double alpha_sq, Scheme scheme,
                   const KeyRatePoint& point) {
    ResultRow r;
    r.distance_km = distance_km;
    r.eta1 = link.channel.eta;
    r.xi1 = link.channel.xi;
    r.eta2 = link.detector.eta;
    r.xi2 = link.detector.xi;
    r.alpha_sq = alpha_sq;
    r.scheme = scheme;
    r.key_rate = point.rate;
    r.postselection_fraction = point.postselection_fraction;
    r.n_trunc = point.config.n_trunc;
    r.y_nodes = point.config.y_nodes;
    r.m_grid = point.config.m_grid;
    r.converged = point.converged;
    return r;
}

ResultRow make_row(const SweepRow& row) {
    ResultRow r = make_row(row.distance_km, row.link, row.alpha_sq, row.scheme, row.point);
    if (!row.ok) {
        r.key_rate = 0.0;
        r.converged = false;
    }
    return r;
}

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& csv_out,
                std::ostream& diag) {
    if (command == "rate") {
        const ProtocolConfig pc = to_protocol_config(cfg);
        const KeyRatePoint point = secret_key_rate(pc);
        csv_out << csv_header() << "\n";
        csv_out << to_csv(make_row(resolved_distance_km(cfg), pc.link, cfg.alpha_sq, cfg.scheme,
                                   point))
                << "\n";
        diag << "rate: " << num(point.rate) << " bits/pulse, postselection fraction "
             << num(point.postselection_fraction) << ", "
             << (point.converged ? "healthy" : "NUMERICALLY SUSPECT") << "\n";
        return 0;
    }
    if (command == "sweep") return emit_sweep(cfg, false, csv_out, diag);
    if (command == "optimize") return emit_sweep(cfg, true, csv_out, diag);
    if (command == "converge") {
        const ProtocolConfig pc = to_protocol_config(cfg);
        const ConvergenceReport rep = convergence_check(pc);
        const double d = resolved_distance_km(cfg);
        csv_out << csv_header() << "\n";
        csv_out << to_csv(make_row(d, pc.link, cfg.alpha_sq, cfg.scheme, rep.base)) << "\n";
        csv_out << to_csv(make_row(d, pc.link, cfg.alpha_sq, cfg.scheme, rep.refined)) << "\n";
        diag << "converge: base " << num(rep.base.rate) << ", refined " << num(rep.refined.rate)
             << ", change " << num(rep.rel_change)
             << (rep.converged ? " -- converged\n" : " -- NOT converged\n");
        return rep.converged ? 0 : 1;
    }
    throw std::invalid_argument("run_command: unknown command '" + command + "'");
}

std::string gnuplot_script(const RunConfig& cfg, const std::string& csv_path) {
    const double total = sweep_total_xi(cfg);
    std::ostringstream out;
    out << "# secret key rate vs distance, from " << csv_path << "\n";
    out << "set datafile separator \",\"\n";
    out << "set logscale y\n";
    out << "set xlabel \"distance [km]\"\n";
    out << "set ylabel \"secret key rate [bits/pulse]\"\n";
    out << "set key outside\n";
    out << "plot \\\n";
    bool first = true;
    for (const Scheme scheme : cfg.sweep_schemes) {
        for (const double frac : cfg.xi2_fractions) {
            if (!first) out << ", \\\n";
            first = false;
            const double xi2 = frac * total;
            out << "  \"" << csv_path << "\" every ::1 using 1:(strcol(7) eq \""
                << scheme_name(scheme) << "\" && abs($5 - " << num(xi2)
                << ") < 1e-9 && $8 > 0 ? $8 : 1/0) with linespoints title \""
                << scheme_name(scheme) << ", detector noise fraction " << num(frac) << "\"";
        }
    }
    out << "\n";
    return out.str();
}

}  // namespace cvqkd
