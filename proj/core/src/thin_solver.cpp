#include "memfem/thin_solver.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "memfem/errors.hpp"

namespace memfem {

namespace {

int checked_step_count(double t_end, double dt, const char* what) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const double raw = t_end / dt;
    const int k = static_cast<int>(std::lround(raw));
    if (k < 1 || std::abs(raw - k) > 1e-9 * std::max(1.0, raw))
        throw ConfigError(std::string(what) + " must be a positive multiple of the time step");
    return k;
}

struct LevelCache {
    std::vector<std::vector<double>> f;       // nodal source per level
    std::vector<std::vector<double>> ell;     // targets per level
    std::vector<unsigned char> ready;

    void ensure(const ThinOperators& ops, const TimeSampler& sample,
                const std::vector<double>& times, int k) {
        if (ready[k]) return;
        f[k] = sample(times[k]);
        const std::vector<double> ubar = ops.solve_zero_trace(f[k]);
        ell[k] = ops.compute_targets(ubar, f[k]);
        ready[k] = 1;
    }
};

ThinLevel make_level(const ThinOperators& ops, double t, const std::vector<double>& f,
                     const std::vector<double>& ell, const std::vector<double>& c,
                     const TraceField& h, const std::vector<double>& u) {
    ThinLevel lv;
    lv.t = t;
    lv.ell = ell;
    lv.c = c;
    lv.jump_total = ops.jump_flux(u, f).total;
    lv.bulk_energy = ops.bulk_grad_energy(u);
    lv.surface_grad_energy = surface_grad_energy(ops.surface(), h);
    lv.f_l2sq = ops.lumped_l2sq(f);
    return lv;
}

void run_marching(const ThinOperators& ops, const ThinConfig& cfg, const TimeSampler& f,
                  ThinResult& out) {
    const int k_end = static_cast<int>(out.times.size()) - 1;
    const CgOptions lb_cg{ops.tols().cg_tol, ops.tols().cg_max_iter};

    LevelCache cache;
    cache.f.resize(out.times.size());
    cache.ell.resize(out.times.size());
    cache.ready.assign(out.times.size(), 0);

    cache.ensure(ops, f, out.times, 0);
    Projection p = ops.project(out.u0_samples, cache.ell[0]);
    out.h[0] = p.trace;
    std::vector<std::vector<double>> c(out.times.size());
    c[0] = p.constants;

    for (int k = 0; k <= k_end; ++k) {
        const std::vector<double> u = ops.solve_transmission(cache.f[k], out.h[k]);
        out.levels.push_back(
            make_level(ops, out.times[k], cache.f[k], cache.ell[k], c[k], out.h[k], u));
        if (std::find(cfg.dump_levels.begin(), cfg.dump_levels.end(), k) !=
            cfg.dump_levels.end())
            out.dumps.emplace_back(k, u);
        if (k == k_end) {
            out.final_field = u;
            break;
        }
        const FluxFunctional g = ops.jump_flux(u, cache.f[k]);
        const TraceField v =
            lb_solve(ops.surface(), cfg.alpha, g.nodal, ops.tols().compat_tol, lb_cg);
        TraceField w = out.h[k];
        w.add_scaled(v, cfg.dt);
        cache.ensure(ops, f, out.times, k + 1);
        p = ops.project(w, cache.ell[k + 1]);
        out.h[k + 1] = p.trace;
        c[k + 1] = p.constants;
    }
}

void run_picard(const ThinOperators& ops, const ThinConfig& cfg, const TimeSampler& f,
                ThinResult& out) {
    const int k_end = static_cast<int>(out.times.size()) - 1;
    const int window_steps = checked_step_count(cfg.window, cfg.dt, "fixed-point window");
    const CgOptions lb_cg{ops.tols().cg_tol, ops.tols().cg_max_iter};

    LevelCache cache;
    cache.f.resize(out.times.size());
    cache.ell.resize(out.times.size());
    cache.ready.assign(out.times.size(), 0);

    std::vector<std::vector<double>> c(out.times.size());
    TraceField w_start = out.u0_samples;

    int a = 0;
    int cur_steps = window_steps;
    while (a < k_end) {
        int halvings_here = 0;
        for (;;) {  // attempts at this window, shrinking on poor contraction
            const int b = std::min(a + cur_steps, k_end);
            for (int k = a; k <= b; ++k) cache.ensure(ops, f, out.times, k);

            // Initial iterate: the raw interface data projected level by level.
            std::vector<TraceField> cur(b - a + 1);
            for (int k = a; k <= b; ++k)
                cur[k - a] = ops.project(out.u0_samples, cache.ell[k]).trace;

            WindowReport report;
            report.t_start = out.times[a];
            report.t_end = out.times[b];
            report.window_used = out.times[b] - out.times[a];
            report.halvings = halvings_here;

            bool converged = false;
            bool stalled = false;
            int high_ratio_streak = 0;
            std::vector<TraceField> next(b - a + 1);
            std::vector<std::vector<double>> next_c(b - a + 1);

            while (report.sweeps < cfg.max_sweeps) {
                ++report.sweeps;
                // One sweep: interface velocities from the frozen iterate, then
                // the window integral re-accumulated by right rectangles and
                // projected level by level. The right endpoint matters: the
                // fixed point is then the implicit trace evolution, a genuinely
                // different O(dt) discretization than the marching scheme
                // (left rectangles), which projection shift-absorption would
                // otherwise reproduce exactly.
                TraceField acc = w_start;
                Projection p = ops.project(acc, cache.ell[a]);
                next[0] = p.trace;
                next_c[0] = p.constants;
                for (int k = a + 1; k <= b; ++k) {
                    const std::vector<double> u =
                        ops.solve_transmission(cache.f[k], cur[k - a]);
                    const FluxFunctional g = ops.jump_flux(u, cache.f[k]);
                    const TraceField v = lb_solve(ops.surface(), cfg.alpha, g.nodal,
                                                  ops.tols().compat_tol, lb_cg);
                    acc.add_scaled(v, cfg.dt);
                    p = ops.project(acc, cache.ell[k]);
                    next[k - a] = p.trace;
                    next_c[k - a] = p.constants;
                }

                double res = 0.0;
                for (int k = a; k <= b; ++k)
                    res = std::max(
                        res, surface_h1_norm(ops.surface(), next[k - a] - cur[k - a]));
                report.residuals.push_back(res);
                const int s = static_cast<int>(report.residuals.size());
                if (s >= 2 && report.residuals[s - 2] > 0.0)
                    report.ratios.push_back(res / report.residuals[s - 2]);

                // An overflowed iterate must read as a stall, not as progress:
                // NaN compares false against every tolerance below.
                if (!std::isfinite(res)) {
                    stalled = true;
                    break;
                }

                cur = next;
                if (res < cfg.picard_tol) {
                    converged = true;
                    break;
                }
                if (!report.ratios.empty() && report.ratios.back() >= 0.95) {
                    if (++high_ratio_streak >= 2) {
                        stalled = true;
                        break;
                    }
                } else {
                    high_ratio_streak = 0;
                }
            }

            if (converged) {
                for (int k = a; k <= b; ++k) {
                    out.h[k] = cur[k - a];
                    // The window-opening projection at k == a is a re-projection
                    // of the previous window's end state; keep the constant that
                    // actually produced the trace there.
                    if (k > a || a == 0) c[k] = next_c[k - a];
                }
                out.windows.push_back(std::move(report));
                w_start = out.h[b];
                a = b;
                break;
            }
            if (!stalled)
                throw ContractionFailure("fixed-point sweep did not converge within " +
                                         std::to_string(cfg.max_sweeps) + " sweeps");
            cur_steps /= 2;
            ++halvings_here;
            ++out.total_halvings;
            if (cur_steps < 1)
                throw ContractionFailure(
                    "fixed-point window fell below the time step while halving");
        }
    }

    // Reporting pass over the settled trajectory.
    for (int k = 0; k <= k_end; ++k) {
        const std::vector<double> u = ops.solve_transmission(cache.f[k], out.h[k]);
        out.levels.push_back(
            make_level(ops, out.times[k], cache.f[k], cache.ell[k], c[k], out.h[k], u));
        if (std::find(cfg.dump_levels.begin(), cfg.dump_levels.end(), k) !=
            cfg.dump_levels.end())
            out.dumps.emplace_back(k, u);
        if (k == k_end) out.final_field = u;
    }
}

}  // namespace

ThinResult run_thin(const ThinOperators& ops, const ThinConfig& cfg, const TimeSampler& f,
                    const TraceField& u0_samples) {
    if (!(cfg.alpha > 0.0)) throw ConfigError("alpha must be positive");
    const int k_end = checked_step_count(cfg.t_end, cfg.dt, "final time");
    if (u0_samples.comp.size() != static_cast<std::size_t>(ops.components()))
        throw ConfigError("initial trace has the wrong number of components");

    ThinResult out;
    out.times.resize(k_end + 1);
    for (int k = 0; k <= k_end; ++k) out.times[k] = cfg.dt * k;
    out.h.resize(k_end + 1);
    out.u0_samples = u0_samples;

    if (cfg.scheme == ThinScheme::Marching)
        run_marching(ops, cfg, f, out);
    else
        run_picard(ops, cfg, f, out);
    return out;
}

EnergyAudit thin_energy_audit(const ThinOperators& ops, const ThinResult& result) {
    const int k_end = static_cast<int>(result.levels.size()) - 1;
    EnergyAudit audit;
    if (k_end < 0) return audit;
    const double dt = k_end > 0 ? result.times[1] - result.times[0] : 0.0;

    double bulk = 0.0, f_sq = 0.0, surf_max = 0.0;
    for (int k = 0; k <= k_end; ++k) {
        surf_max = std::max(surf_max, result.levels[k].surface_grad_energy);
        if (k < k_end) {
            bulk += dt * result.levels[k].bulk_energy;
            f_sq += dt * result.levels[k].f_l2sq;
        }
    }
    audit.lhs = bulk + surf_max;
    audit.rhs = std::sqrt(f_sq) + surface_h1_norm(ops.surface(), result.u0_samples);
    audit.ratio = audit.rhs > 0.0 ? audit.lhs / (audit.rhs * audit.rhs) : 0.0;
    return audit;
}

RearrangementReport thin_rearrangement_report(const ThinOperators& ops,
                                              const ThinResult& result) {
    RearrangementReport rep;
    if (result.levels.empty()) throw ConfigError("rearrangement report needs a finished run");
    rep.c0 = result.levels[0].c;
    const TraceField gap = result.h[0] - result.u0_samples;
    for (int i = 0; i < ops.components(); ++i) {
        rep.l2_gap.push_back(surface_l2_norm_component(ops.surface(), gap, i));
        rep.predicted_gap.push_back(std::abs(rep.c0[static_cast<std::size_t>(i)]) *
                                    std::sqrt(ops.surface().comps[i].perimeter));
    }
    return rep;
}

}  // namespace memfem
