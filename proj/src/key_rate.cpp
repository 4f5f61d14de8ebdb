#include "cvqkd/key_rate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "cvqkd/quadrature.hpp"

namespace cvqkd {

namespace {

// Parallel index map with deterministic output: workers pull indices from an
// atomic counter and write into caller-owned slots, so the result layout is
// independent of the thread count.  The first worker exception is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    int t = threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : threads;
    t = std::max(1, std::min(t, n));
    if (t <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

double effective_m_max(const ProtocolConfig& cfg) {
    const double mm = cfg.m_max > 0.0 ? cfg.m_max : default_m_max(cfg.link, cfg.signal);
    const ChannelParams total = compose_channels(cfg.link);
    if (!(mm > std::sqrt(total.eta) * cfg.signal.alpha))
        throw std::invalid_argument("secret_key_rate: m_max must exceed sqrt(eta)*alpha");
    return mm;
}

void validate(const ProtocolConfig& cfg) {
    if (cfg.n_trunc < 1) throw std::invalid_argument("ProtocolConfig: n_trunc must be >= 1");
    if (cfg.y_nodes < 1 || cfg.y_nodes % 2 == 0)
        throw std::invalid_argument("ProtocolConfig: y_nodes must be odd and >= 1");
    if (cfg.m_grid < 8) throw std::invalid_argument("ProtocolConfig: m_grid must be >= 8");
    if (!(cfg.signal.alpha > 0.0))
        throw std::invalid_argument("ProtocolConfig: alpha must be > 0");
}

struct SliceContext {
    const ProtocolConfig* cfg;
    YQuadrature rule;
    ChannelParams total;
};

SliceResult slice_at(double m_abs, const SliceContext& ctx) {
    SliceOptions opts;
    opts.parity_shortcut = ctx.cfg->parity_shortcut;
    const ConditionalEnsemble ens = sliced_states(m_abs, ctx.cfg->signal, ctx.cfg->link,
                                                  ctx.cfg->n_trunc, ctx.rule, opts);
    const HolevoPair hp = holevo_both(ens);
    SliceResult out;
    out.m_abs = m_abs;
    out.eps = ens.eps;
    out.i_ab = mutual_information(ens.eps, ctx.cfg->signal.f);
    out.chi_dr = hp.chi_dr;
    out.chi_rr = hp.chi_rr;
    out.stats = ens.stats;
    out.stats.merge(hp.stats);
    return out;
}

double gain(const SliceResult& s, Scheme scheme) {
    return s.i_ab - (scheme == Scheme::DR ? s.chi_dr : s.chi_rr);
}

// Deterministic Illinois (modified regula falsi) root refinement of the
// postselection boundary inside a sign-change bracket.
double refine_boundary(double lo, double g_lo, double hi, double g_hi, Scheme scheme,
                       const SliceContext& ctx, std::vector<SliceResult>* evals) {
    for (int iter = 0; iter < 80 && hi - lo > 1e-12 * hi; ++iter) {
        double mid = (g_hi * lo - g_lo * hi) / (g_hi - g_lo);
        const double margin = 0.01 * (hi - lo);
        mid = std::min(std::max(mid, lo + margin), hi - margin);
        const SliceResult s = slice_at(mid, ctx);
        if (evals) evals->push_back(s);
        const double g_mid = gain(s, scheme);
        if (g_mid == 0.0) return mid;
        if ((g_mid > 0.0) == (g_hi > 0.0)) {
            hi = mid;
            g_hi = g_mid;
            g_lo *= 0.5;  // Illinois damping keeps the stalled end moving
        } else {
            lo = mid;
            g_lo = g_mid;
            g_hi *= 0.5;
        }
    }
    return 0.5 * (lo + hi);
}

// Kept intervals of m in (0, m_max] where the scheme's integrand is positive,
// from the shared scan of sign changes.  The gain at m -> 0+ is not positive
// in practice (eps -> 1/2 drives I_AB towards 1 - f while the eavesdropper
// bound stays nonnegative), but if the very first sample is already positive
// the leading edge is pinned against a fixed tiny anchor so the result does
// not depend on the scan resolution.
std::vector<std::pair<double, double>> kept_intervals(
    const std::vector<SliceResult>& scan, double m_max, Scheme scheme,
    const SliceContext& ctx, std::vector<SliceResult>* extra_evals) {
    std::vector<std::pair<double, double>> kept;
    double open = -1.0;
    double prev_m = 0.0;
    double prev_g = 0.0;
    bool have_prev = false;
    for (const SliceResult& s : scan) {
        const double g = gain(s, scheme);
        if (g > 0.0 && open < 0.0) {
            if (!have_prev) {
                const double anchor = m_max * 1e-9;
                const SliceResult lo = slice_at(anchor, ctx);
                if (extra_evals) extra_evals->push_back(lo);
                const double g_lo = gain(lo, scheme);
                open = g_lo > 0.0 ? anchor
                                  : refine_boundary(anchor, g_lo, s.m_abs, g, scheme, ctx,
                                                    extra_evals);
            } else if (prev_g <= 0.0) {
                open = refine_boundary(prev_m, prev_g, s.m_abs, g, scheme, ctx, extra_evals);
            }
        } else if (g <= 0.0 && open >= 0.0) {
            kept.emplace_back(
                open, refine_boundary(s.m_abs, g, prev_m, prev_g, scheme, ctx, extra_evals));
            open = -1.0;
        }
        prev_m = s.m_abs;
        prev_g = g;
        have_prev = true;
    }
    if (open >= 0.0) kept.emplace_back(open, m_max);
    return kept;
}

struct Accumulator {
    double rate = 0.0;
    double fraction = 0.0;
};

}  // namespace

double default_m_max(const LinkModel& link, const ProtocolSignal& signal) {
    const ChannelParams total = compose_channels(link);
    return std::sqrt(total.eta) * signal.alpha + 6.0 * std::sqrt((1.0 + total.xi) / 4.0);
}

SliceResult compute_slice(double m_abs, const ProtocolConfig& cfg) {
    validate(cfg);
    SliceContext ctx{&cfg, detector_noise_nodes(cfg.link, cfg.y_nodes),
                     compose_channels(cfg.link)};
    return slice_at(m_abs, ctx);
}

double key_rate_integrand(double m, const ProtocolConfig& cfg) {
    if (!(m > 0.0)) throw std::invalid_argument("key_rate_integrand: m must be > 0");
    const SliceResult s = compute_slice(m, cfg);
    const double g = gain(s, cfg.scheme);
    if (g <= 0.0) return 0.0;
    const ChannelParams total = compose_channels(cfg.link);
    return (quadrature_pdf(m, cfg.signal.alpha, total) +
            quadrature_pdf(-m, cfg.signal.alpha, total)) *
           g;
}

RatePair secret_key_rate_both(const ProtocolConfig& cfg) {
    validate(cfg);
    const double m_max = effective_m_max(cfg);
    SliceContext ctx{&cfg, detector_noise_nodes(cfg.link, cfg.y_nodes),
                     compose_channels(cfg.link)};

    const int panels = std::max(1, (cfg.m_grid + 7) / 8);
    const int scan_n = std::max(16, 2 * panels);

    // Shared coarse scan of both schemes' gains.
    std::vector<SliceResult> scan(scan_n);
    parallel_for(scan_n, cfg.threads,
                 [&](int i) { scan[i] = slice_at(m_max * (i + 1) / scan_n, ctx); });

    SpectrumStats stats;
    for (const SliceResult& s : scan) stats.merge(s.stats);
    // Diagnostic only: the DR Holevo bound is expected to be non-increasing
    // in |m| in the regimes of interest (see SpectrumStats).
    for (int i = 1; i < scan_n; ++i)
        if (scan[i].chi_dr > scan[i - 1].chi_dr + 1e-9) ++stats.chi_monotonicity_breaks;

    RatePair out;
    const QuadratureRule gl = gauss_legendre(8);
    for (Scheme scheme : {Scheme::DR, Scheme::RR}) {
        std::vector<SliceResult> boundary_evals;
        const auto kept = kept_intervals(scan, m_max, scheme, ctx, &boundary_evals);
        for (const SliceResult& s : boundary_evals) stats.merge(s.stats);

        // Distribute the panel budget over the kept intervals by length.
        double total_len = 0.0;
        for (const auto& iv : kept) total_len += iv.second - iv.first;
        std::vector<double> nodes;
        std::vector<double> node_w;
        auto push_panel = [&](double a, double b) {
            for (int j = 0; j < 8; ++j) {
                nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[j]);
                node_w.push_back(0.5 * (b - a) * gl.weights[j]);
            }
        };
        for (const auto& iv : kept) {
            const double len = iv.second - iv.first;
            const int p = std::max(1, static_cast<int>(std::lround(panels * len / total_len)));
            for (int pi = 0; pi < p; ++pi) {
                const double a = iv.first + len * pi / p;
                const double b = iv.first + len * (pi + 1) / p;
                if (pi == 0 && iv.first <= m_max * 1e-6) {
                    // An interval reaching down to m = 0 sees the integrand's
                    // weak endpoint singularity there (entropies contain
                    // eigenvalue terms like m^2 log m), which a single fixed-
                    // order panel resolves only algebraically.  Geometric
                    // subdivision toward the endpoint restores fast
                    // convergence at the cost of a few extra panels.
                    const double h = b - a;
                    push_panel(a, a + h * 0x1p-12);
                    for (int lvl = 12; lvl >= 1; --lvl)
                        push_panel(a + h * std::ldexp(1.0, -lvl),
                                   a + h * std::ldexp(1.0, -(lvl - 1)));
                } else {
                    push_panel(a, b);
                }
            }
        }

        std::vector<SliceResult> vals(nodes.size());
        parallel_for(static_cast<int>(nodes.size()), cfg.threads,
                     [&](int i) { vals[i] = slice_at(nodes[i], ctx); });

        Accumulator acc;
        SpectrumStats scheme_stats;
        for (size_t i = 0; i < nodes.size(); ++i) {
            scheme_stats.merge(vals[i].stats);
            const double wgt = quadrature_pdf(nodes[i], cfg.signal.alpha, ctx.total) +
                               quadrature_pdf(-nodes[i], cfg.signal.alpha, ctx.total);
            // Inside a kept interval by construction; clamp defensively in
            // case a boundary was refined to finite precision.
            acc.rate += node_w[i] * wgt * std::max(0.0, gain(vals[i], scheme));
            acc.fraction += node_w[i] * wgt;
        }

        KeyRatePoint& point = scheme == Scheme::DR ? out.dr : out.rr;
        point.rate = (cfg.apply_sifting ? 0.5 : 1.0) * acc.rate;
        point.postselection_fraction = std::min(1.0, acc.fraction);
        point.config = cfg;
        point.config.scheme = scheme;
        point.config.m_max = m_max;
        point.stats = stats;
        point.stats.merge(scheme_stats);
        point.converged = point.stats.healthy() && std::isfinite(point.rate);
    }
    return out;
}

KeyRatePoint secret_key_rate(const ProtocolConfig& cfg) {
    const RatePair pair = secret_key_rate_both(cfg);
    return cfg.scheme == Scheme::DR ? pair.dr : pair.rr;
}

std::vector<double> AlphaGrid::values() const {
    if (!(min_sq > 0.0) || !(max_sq >= min_sq) || !(step > 0.0))
        throw std::invalid_argument("AlphaGrid: need 0 < min_sq <= max_sq and step > 0");
    std::vector<double> v;
    for (int i = 0;; ++i) {
        const double a = min_sq + i * step;
        if (a > max_sq + 1e-12) break;
        v.push_back(a);
    }
    return v;
}

OptimizePair optimize_photon_number_both(const ProtocolConfig& cfg, const AlphaGrid& grid) {
    const std::vector<double> alphas = grid.values();
    OptimizePair best;
    bool first = true;
    for (const double alpha_sq : alphas) {
        ProtocolConfig c = cfg;
        c.signal.alpha = std::sqrt(alpha_sq);
        const RatePair pair = secret_key_rate_both(c);
        if (first || pair.dr.rate > best.dr.point.rate) {
            best.dr.alpha_sq = alpha_sq;
            best.dr.point = pair.dr;
        }
        if (first || pair.rr.rate > best.rr.point.rate) {
            best.rr.alpha_sq = alpha_sq;
            best.rr.point = pair.rr;
        }
        first = false;
    }
    best.dr.all_zero = best.dr.point.rate == 0.0;
    best.rr.all_zero = best.rr.point.rate == 0.0;
    return best;
}

OptimizeResult optimize_photon_number(const ProtocolConfig& cfg, const AlphaGrid& grid) {
    const OptimizePair pair = optimize_photon_number_both(cfg, grid);
    return cfg.scheme == Scheme::DR ? pair.dr : pair.rr;
}

std::vector<SweepRow> sweep_distance(const ProtocolConfig& base, const SweepSpec& spec) {
    if (spec.distances_km.empty())
        throw std::invalid_argument("sweep_distance: need at least one distance");
    if (spec.schemes.empty())
        throw std::invalid_argument("sweep_distance: need at least one scheme");
    const ChannelParams total = compose_channels(base.link);
    const double eta2 = base.link.detector.eta;

    struct Cell {
        LinkModel link;
        RatePair rates;
        OptimizePair opt;
        bool ok = true;
        std::string error;
    };
    std::vector<Cell> cells(spec.xi2_fractions.size() * spec.distances_km.size());

    for (size_t fi = 0; fi < spec.xi2_fractions.size(); ++fi) {
        for (size_t di = 0; di < spec.distances_km.size(); ++di) {
            Cell& cell = cells[fi * spec.distances_km.size() + di];
            try {
                const double frac = spec.xi2_fractions[fi];
                const double d = spec.distances_km[di];
                if (!(d > 0.0))
                    throw std::invalid_argument("sweep_distance: distances must be > 0");
                const double xi2 = frac * total.xi;
                const double xi1 = (total.xi - xi2) / eta2;
                if (xi1 < 0.0)
                    throw std::invalid_argument(
                        "sweep_distance: xi2 fraction exceeds the total excess noise");
                double eta1 = distance_to_transmission(d, spec.loss_db_per_km);
                if (eta1 >= 1.0) eta1 = 1.0 - 1e-9;
                cell.link = LinkModel::make({eta1, xi1}, {eta2, xi2});
                ProtocolConfig cfg = base;
                cfg.link = cell.link;
                if (spec.optimize_alpha)
                    cell.opt = optimize_photon_number_both(cfg, spec.alpha_grid);
                else
                    cell.rates = secret_key_rate_both(cfg);
            } catch (const std::exception& ex) {
                cell.ok = false;
                cell.error = ex.what();
                std::cerr << "sweep: skipped distance " << spec.distances_km[di]
                          << " km, fraction " << spec.xi2_fractions[fi] << ": " << ex.what()
                          << "\n";
            }
        }
    }

    std::vector<SweepRow> rows;
    rows.reserve(spec.schemes.size() * cells.size());
    for (const Scheme scheme : spec.schemes) {
        for (size_t fi = 0; fi < spec.xi2_fractions.size(); ++fi) {
            for (size_t di = 0; di < spec.distances_km.size(); ++di) {
                const Cell& cell = cells[fi * spec.distances_km.size() + di];
                SweepRow row;
                row.distance_km = spec.distances_km[di];
                row.xi2_fraction = spec.xi2_fractions[fi];
                row.scheme = scheme;
                row.link = cell.link;
                row.ok = cell.ok;
                row.error = cell.error;
                if (cell.ok) {
                    if (spec.optimize_alpha) {
                        const OptimizeResult& r =
                            scheme == Scheme::DR ? cell.opt.dr : cell.opt.rr;
                        row.alpha_sq = r.alpha_sq;
                        row.point = r.point;
                    } else {
                        row.alpha_sq = base.signal.alpha * base.signal.alpha;
                        row.point = scheme == Scheme::DR ? cell.rates.dr : cell.rates.rr;
                    }
                } else {
                    row.alpha_sq = base.signal.alpha * base.signal.alpha;
                    row.point.converged = false;
                    row.point.config = base;
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

ConvergenceReport convergence_check(const ProtocolConfig& cfg) {
    ConvergenceReport rep;
    rep.base = secret_key_rate(cfg);
    ProtocolConfig fine = cfg;
    fine.n_trunc += 4;
    fine.y_nodes += 10;
    fine.m_grid *= 2;
    rep.refined = secret_key_rate(fine);

    const double b = rep.base.rate;
    const double r = rep.refined.rate;
    const double diff = std::abs(b - r);
    if (std::max(b, r) < 1e-6) {
        rep.rel_change = diff;
        rep.converged = diff < 1e-9;
    } else {
        rep.rel_change = diff / std::max(std::abs(r), 1e-300);
        rep.converged = rep.rel_change < 1e-3;
    }
    rep.converged = rep.converged && rep.base.converged && rep.refined.converged;
    return rep;
}

}  // namespace cvqkd
