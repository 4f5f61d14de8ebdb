#include "cvqkd/run_config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cvqkd {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config: " + path + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& v, const std::string& path) {
    size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        fail(path, "expected a number, got '" + v + "'");
    }
    if (pos != v.size()) fail(path, "trailing characters in '" + v + "'");
    if (!std::isfinite(x)) fail(path, "value must be finite");
    return x;
}

int parse_int(const std::string& v, const std::string& path) {
    size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v, &pos);
    } catch (const std::exception&) {
        fail(path, "expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) fail(path, "trailing characters in '" + v + "'");
    return static_cast<int>(x);
}

bool parse_bool(const std::string& v, const std::string& path) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(path, "expected true or false, got '" + v + "'");
}

Scheme parse_scheme(const std::string& v, const std::string& path) {
    if (v == "dr") return Scheme::DR;
    if (v == "rr") return Scheme::RR;
    fail(path, "expected dr or rr, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : v) {
        if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Numbers, or start:step:stop ranges (inclusive stop, within rounding).
std::vector<double> parse_number_list(const std::string& v, const std::string& path) {
    std::vector<double> out;
    for (const std::string& tok : split_list(v)) {
        const size_t c1 = tok.find(':');
        if (c1 == std::string::npos) {
            out.push_back(parse_double(tok, path));
            continue;
        }
        const size_t c2 = tok.find(':', c1 + 1);
        if (c2 == std::string::npos) fail(path, "range must be start:step:stop, got '" + tok + "'");
        const double start = parse_double(tok.substr(0, c1), path);
        const double step = parse_double(tok.substr(c1 + 1, c2 - c1 - 1), path);
        const double stop = parse_double(tok.substr(c2 + 1), path);
        if (!(step > 0.0)) fail(path, "range step must be > 0");
        if (stop < start) fail(path, "range stop must be >= start");
        for (int i = 0;; ++i) {
            const double x = start + i * step;
            if (x > stop + 1e-9 * step) break;
            out.push_back(x);
        }
    }
    if (out.empty()) fail(path, "list must not be empty");
    return out;
}

std::vector<Scheme> parse_scheme_list(const std::string& v, const std::string& path) {
    std::vector<Scheme> out;
    for (const std::string& tok : split_list(v)) out.push_back(parse_scheme(tok, path));
    if (out.empty()) fail(path, "list must not be empty");
    return out;
}

std::string fmt(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt(xs[i]);
    }
    return out;
}

std::string fmt_schemes(const std::vector<Scheme>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += scheme_name(xs[i]);
    }
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::string section;
    std::set<std::string> seen;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        // trailing comments: a marker at the start or after whitespace, so a
        // '#' embedded in a value (say an output path) survives
        for (size_t i = 0; i < line.size(); ++i) {
            if ((line[i] == '#' || line[i] == ';') &&
                (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
                line = trim(line.substr(0, i));
                break;
            }
        }
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                            ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string path = section.empty() ? key : section + "." + key;
        if (!seen.insert(path).second) fail(path, "duplicate key");

        if (section == "channel") {
            if (key == "distance_km")
                cfg.distance_km = parse_double(value, path);
            else if (key == "eta1")
                cfg.eta1 = parse_double(value, path);
            else if (key == "loss_db_per_km")
                cfg.loss_db_per_km = parse_double(value, path);
            else if (key == "xi1")
                cfg.xi1 = parse_double(value, path);
            else
                fail(path, "unknown key");
        } else if (section == "detector") {
            if (key == "eta2")
                cfg.eta2 = parse_double(value, path);
            else if (key == "xi2")
                cfg.xi2 = parse_double(value, path);
            else
                fail(path, "unknown key");
        } else if (section == "signal") {
            if (key == "alpha_sq")
                cfg.alpha_sq = parse_double(value, path);
            else if (key == "f")
                cfg.f = parse_double(value, path);
            else
                fail(path, "unknown key");
        } else if (section == "protocol") {
            if (key == "scheme")
                cfg.scheme = parse_scheme(value, path);
            else if (key == "sifting")
                cfg.sifting = parse_bool(value, path);
            else
                fail(path, "unknown key");
        } else if (section == "numerics") {
            if (key == "n_trunc")
                cfg.n_trunc = parse_int(value, path);
            else if (key == "y_nodes")
                cfg.y_nodes = parse_int(value, path);
            else if (key == "m_grid")
                cfg.m_grid = parse_int(value, path);
            else if (key == "m_max")
                cfg.m_max = parse_double(value, path);
            else if (key == "threads")
                cfg.threads = parse_int(value, path);
            else if (key == "parity_shortcut")
                cfg.parity_shortcut = parse_bool(value, path);
            else
                fail(path, "unknown key");
        } else if (section == "sweep") {
            if (key == "distances")
                cfg.sweep_distances = parse_number_list(value, path);
            else if (key == "xi2_fractions")
                cfg.xi2_fractions = parse_number_list(value, path);
            else if (key == "xi_total")
                cfg.xi_total = parse_double(value, path);
            else if (key == "schemes")
                cfg.sweep_schemes = parse_scheme_list(value, path);
            else if (key == "optimize_alpha")
                cfg.optimize_alpha = parse_bool(value, path);
            else
                fail(path, "unknown key");
        } else if (section == "optimize") {
            if (key == "alpha_sq_min")
                cfg.alpha_grid.min_sq = parse_double(value, path);
            else if (key == "alpha_sq_max")
                cfg.alpha_grid.max_sq = parse_double(value, path);
            else if (key == "alpha_sq_step")
                cfg.alpha_grid.step = parse_double(value, path);
            else
                fail(path, "unknown key");
        } else if (section == "output") {
            if (key == "path")
                cfg.out_path = value;
            else if (key == "gnuplot")
                cfg.gnuplot = parse_bool(value, path);
            else
                fail(path, "unknown key");
        } else {
            fail(path, section.empty() ? "key outside any section" : "unknown section");
        }
    }

    // Range validation, with the key path in every message.
    if (cfg.distance_km && cfg.eta1)
        throw std::invalid_argument(
            "config: channel.distance_km and channel.eta1 are mutually exclusive");
    if (cfg.distance_km && *cfg.distance_km < 0.0) fail("channel.distance_km", "must be >= 0");
    if (cfg.eta1 && !(*cfg.eta1 > 0.0 && *cfg.eta1 < 1.0))
        fail("channel.eta1", "must be in (0, 1); a lossless line is not representable");
    if (!(cfg.loss_db_per_km > 0.0)) fail("channel.loss_db_per_km", "must be > 0");
    if (cfg.xi1 < 0.0) fail("channel.xi1", "must be >= 0");
    if (!(cfg.eta2 > 0.0 && cfg.eta2 <= 1.0)) fail("detector.eta2", "must be in (0, 1]");
    if (cfg.xi2 < 0.0) fail("detector.xi2", "must be >= 0");
    if (!(cfg.alpha_sq > 0.0)) fail("signal.alpha_sq", "must be > 0");
    if (!(cfg.f >= 1.0)) fail("signal.f", "must be >= 1 (1 = ideal error correction)");
    if (cfg.n_trunc < 1) fail("numerics.n_trunc", "must be >= 1");
    if (cfg.y_nodes < 1 || cfg.y_nodes % 2 == 0) fail("numerics.y_nodes", "must be odd and >= 1");
    if (cfg.m_grid < 8) fail("numerics.m_grid", "must be >= 8");
    if (cfg.m_max < 0.0) fail("numerics.m_max", "must be >= 0 (0 = automatic)");
    if (cfg.threads < 0) fail("numerics.threads", "must be >= 0 (0 = all cores)");
    for (const double d : cfg.sweep_distances)
        if (!(d > 0.0)) fail("sweep.distances", "every distance must be > 0");
    for (const double x : cfg.xi2_fractions)
        if (!(x >= 0.0 && x <= 1.0)) fail("sweep.xi2_fractions", "fractions must be in [0, 1]");
    if (cfg.xi_total && *cfg.xi_total < 0.0) fail("sweep.xi_total", "must be >= 0");
    if (!(cfg.alpha_grid.min_sq > 0.0)) fail("optimize.alpha_sq_min", "must be > 0");
    if (!(cfg.alpha_grid.max_sq >= cfg.alpha_grid.min_sq))
        fail("optimize.alpha_sq_max", "must be >= alpha_sq_min");
    if (!(cfg.alpha_grid.step > 0.0)) fail("optimize.alpha_sq_step", "must be > 0");
    return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[channel]\n";
    if (cfg.eta1)
        out << "eta1 = " << fmt(*cfg.eta1) << "\n";
    else
        out << "distance_km = " << fmt(resolved_distance_km(cfg)) << "\n";
    out << "loss_db_per_km = " << fmt(cfg.loss_db_per_km) << "\n";
    out << "xi1 = " << fmt(cfg.xi1) << "\n";
    out << "\n[detector]\n";
    out << "eta2 = " << fmt(cfg.eta2) << "\n";
    out << "xi2 = " << fmt(cfg.xi2) << "\n";
    out << "\n[signal]\n";
    out << "alpha_sq = " << fmt(cfg.alpha_sq) << "\n";
    out << "f = " << fmt(cfg.f) << "\n";
    out << "\n[protocol]\n";
    out << "scheme = " << scheme_name(cfg.scheme) << "\n";
    out << "sifting = " << (cfg.sifting ? "true" : "false") << "\n";
    out << "\n[numerics]\n";
    out << "n_trunc = " << cfg.n_trunc << "\n";
    out << "y_nodes = " << cfg.y_nodes << "\n";
    out << "m_grid = " << cfg.m_grid << "\n";
    out << "m_max = " << fmt(cfg.m_max) << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "parity_shortcut = " << (cfg.parity_shortcut ? "true" : "false") << "\n";
    out << "\n[sweep]\n";
    out << "distances = " << fmt_list(cfg.sweep_distances) << "\n";
    out << "xi2_fractions = " << fmt_list(cfg.xi2_fractions) << "\n";
    if (cfg.xi_total) out << "xi_total = " << fmt(*cfg.xi_total) << "\n";
    out << "schemes = " << fmt_schemes(cfg.sweep_schemes) << "\n";
    out << "optimize_alpha = " << (cfg.optimize_alpha ? "true" : "false") << "\n";
    out << "\n[optimize]\n";
    out << "alpha_sq_min = " << fmt(cfg.alpha_grid.min_sq) << "\n";
    out << "alpha_sq_max = " << fmt(cfg.alpha_grid.max_sq) << "\n";
    out << "alpha_sq_step = " << fmt(cfg.alpha_grid.step) << "\n";
    out << "\n[output]\n";
    if (!cfg.out_path.empty()) out << "path = " << cfg.out_path << "\n";
    out << "gnuplot = " << (cfg.gnuplot ? "true" : "false") << "\n";
    return out.str();
}

double resolved_distance_km(const RunConfig& cfg) {
    if (cfg.distance_km) return *cfg.distance_km;
    if (cfg.eta1) return transmission_to_distance(*cfg.eta1, cfg.loss_db_per_km);
    return 25.0;
}

LinkModel make_link(const RunConfig& cfg) {
    double eta1;
    if (cfg.eta1) {
        eta1 = *cfg.eta1;
    } else {
        eta1 = distance_to_transmission(resolved_distance_km(cfg), cfg.loss_db_per_km);
        if (eta1 >= 1.0) {
            eta1 = 1.0 - 1e-9;
            std::cerr << "config: 0 km line is lossless, which the security model cannot "
                         "represent; clamping eta1 to 1 - 1e-9\n";
        }
    }
    return LinkModel::make({eta1, cfg.xi1}, {cfg.eta2, cfg.xi2});
}

ProtocolConfig to_protocol_config(const RunConfig& cfg) {
    ProtocolConfig pc;
    pc.link = make_link(cfg);
    pc.signal.alpha = std::sqrt(cfg.alpha_sq);
    pc.signal.f = cfg.f;
    pc.scheme = cfg.scheme;
    pc.n_trunc = cfg.n_trunc;
    pc.y_nodes = cfg.y_nodes;
    pc.m_grid = cfg.m_grid;
    pc.m_max = cfg.m_max;
    pc.threads = cfg.threads;
    pc.parity_shortcut = cfg.parity_shortcut;
    pc.apply_sifting = cfg.sifting;
    return pc;
}

SweepSpec to_sweep_spec(const RunConfig& cfg) {
    SweepSpec spec;
    spec.distances_km = cfg.sweep_distances;
    spec.xi2_fractions = cfg.xi2_fractions;
    spec.schemes = cfg.sweep_schemes;
    spec.loss_db_per_km = cfg.loss_db_per_km;
    spec.optimize_alpha = cfg.optimize_alpha;
    spec.alpha_grid = cfg.alpha_grid;
    return spec;
}

}  // namespace cvqkd
