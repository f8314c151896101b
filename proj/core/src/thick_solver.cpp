#include "memfem/thick_solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <utility>

#include "memfem/errors.hpp"

namespace memfem {

namespace {

int checked_steps(double t_end, double dt, const char* what) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    const double raw = t_end / dt;
    const int k = static_cast<int>(std::lround(raw));
    if (k < 1 || std::abs(raw - k) > 1e-9 * std::max(1.0, raw))
        throw ConfigError(std::string(what) + " must be a positive multiple of the time step");
    return k;
}

RegionPred keep_component(int comp) {
    return [comp](const RegionLabel& l) {
        return l.component == comp &&
               (l.kind == Region::Inclusion || l.kind == Region::Membrane);
    };
}

}  // namespace

ThickOperators::ThickOperators(const Mesh& mesh, const ThickConfig& cfg)
    : mesh_(&mesh), cfg_(cfg) {
    if (!mesh.has_membrane() || mesh.band_outer.empty())
        throw GeometryError("thick operators need a mesh with membrane bands");
    if (!(cfg.sigma_int > 0.0) || !(cfg.sigma_out > 0.0))
        throw ConfigError("conductivities must be positive");
    if (!(cfg.alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (cfg.delta < 0.0) throw ConfigError("delta must be nonnegative");
    if (cfg.scheme != ThickScheme::Implicit && !(cfg.delta > 0.0))
        throw ConfigError("explicit and picard schemes require delta > 0");

    b_membrane_ = cfg.concentration_scaling ? cfg.alpha / mesh.eta : cfg.alpha;

    CoefficientMap k_map;
    k_map.outer = cfg.sigma_out;
    k_map.inclusion = cfg.sigma_int;
    k_map.membrane = 0.0;

    CoefficientMap b_map;
    b_map.outer = cfg.delta;
    b_map.inclusion = cfg.delta;
    b_map.membrane = b_membrane_;

    // Zero-coefficient triangles still emit (zero) entries, so the two forms
    // share a sparsity pattern and combine exactly.
    a_k_ = assemble_stiffness(mesh, k_map);
    a_b_ = assemble_stiffness(mesh, b_map);
    a_impl_ = a_b_.plus_scaled(a_k_, cfg.dt);

    CoefficientMap outer_map;
    outer_map.outer = cfg.sigma_out;
    a_outer_ = assemble_stiffness(mesh, outer_map, keep_kind(Region::Outer));
    a_grad_memb_ = assemble_stiffness(mesh, CoefficientMap::constant(1.0),
                                      keep_kind(Region::Membrane));
    a_grad_cond_ =
        assemble_stiffness(mesh, CoefficientMap::constant(1.0), keep_conductors);

    const auto boundary = fix_boundary(mesh);
    implicit_sys_ = DirichletSystem(a_impl_, boundary);
    has_explicit_ = cfg.delta > 0.0;
    if (has_explicit_) explicit_sys_ = DirichletSystem(a_b_, boundary);

    membrane_mask_.assign(mesh.nodes.size(), 0);
    for (std::size_t p = 0; p < mesh.nodes.size(); ++p) {
        if (boundary[p] || mesh.node_touches(static_cast<int>(p), Region::Membrane))
            membrane_mask_[p] = 1;
    }
    extension_sys_ = DirichletSystem(
        assemble_stiffness(mesh, CoefficientMap::constant(1.0), keep_conductors),
        membrane_mask_);
}

ExtensionReport ThickOperators::extend_initial(const std::vector<double>& u0_nodal) const {
    const std::size_t n = mesh_->nodes.size();
    if (u0_nodal.size() != n) throw InvalidField("initial data has the wrong length");

    std::vector<double> fixed(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        if (mesh_->node_touches(static_cast<int>(p), Region::Membrane)) {
            if (!std::isfinite(u0_nodal[p]))
                throw InvalidField("initial membrane data is non-finite");
            fixed[p] = u0_nodal[p];
        }
    }

    ExtensionReport rep;
    rep.field = extension_sys_.solve(std::vector<double>(n, 0.0), fixed, cg());
    const FieldNorms all = field_norms(*mesh_, rep.field);
    const FieldNorms memb = field_norms(*mesh_, rep.field, keep_kind(Region::Membrane));
    const double memb_norm = std::sqrt(memb.l2 * memb.l2 + memb.h1_semi * memb.h1_semi);
    rep.norm_ratio =
        memb_norm > 0.0
            ? std::sqrt(all.l2 * all.l2 + all.h1_semi * all.h1_semi) / memb_norm
            : 0.0;
    return rep;
}

std::vector<double> ThickOperators::step_implicit(const std::vector<double>& u,
                                                  const std::vector<double>& f_nodal) const {
    std::vector<double> load = a_b_.multiply(u);
    const std::vector<double> fl = lumped_load(*mesh_, f_nodal);
    for (std::size_t p = 0; p < load.size(); ++p) load[p] += cfg_.dt * fl[p];
    return implicit_sys_.solve(load, std::vector<double>(load.size(), 0.0), cg());
}

std::vector<double> ThickOperators::velocity(const std::vector<double>& x,
                                             const std::vector<double>& f_nodal) const {
    if (!has_explicit_)
        throw ConfigError("auxiliary velocity solve requires delta > 0");
    std::vector<double> load = lumped_load(*mesh_, f_nodal);
    const std::vector<double> kx = a_k_.multiply(x);
    for (std::size_t p = 0; p < load.size(); ++p) load[p] -= kx[p];
    return explicit_sys_.solve(load, std::vector<double>(load.size(), 0.0), cg());
}

FluxCondition ThickOperators::flux_condition(const std::vector<double>& u,
                                             const std::vector<double>& f_nodal) const {
    FluxCondition fc;
    const std::vector<double> au = a_outer_.multiply(u);
    const std::vector<double> load_out =
        lumped_load(*mesh_, f_nodal, keep_kind(Region::Outer));

    for (std::size_t c = 0; c < mesh_->band_outer.size(); ++c) {
        double flux = 0.0;
        for (int p : mesh_->band_outer[c].nodes) flux += au[p] - load_out[p];

        const std::vector<double> load_comp =
            lumped_load(*mesh_, f_nodal, keep_component(static_cast<int>(c) + 1));
        double target = 0.0;
        for (double v : load_comp) target += v;

        fc.flux.push_back(flux);
        fc.target.push_back(target);
        fc.residual.push_back(std::abs(flux - target));
        fc.scale.push_back(std::max({1.0, std::abs(flux), std::abs(target)}));
    }
    return fc;
}

double ThickOperators::membrane_grad_energy(const std::vector<double>& u) const {
    return a_grad_memb_.quadratic(u);
}

double ThickOperators::conductor_grad_energy(const std::vector<double>& u) const {
    return a_grad_cond_.quadratic(u);
}

double ThickOperators::capacity_energy(const std::vector<double>& u) const {
    return 0.5 * a_b_.quadratic(u);
}

double ThickOperators::bulk_h1_norm(const std::vector<double>& u) const {
    const FieldNorms n = field_norms(*mesh_, u);
    return std::sqrt(n.l2 * n.l2 + n.h1_semi * n.h1_semi);
}

double ThickOperators::membrane_h1sq(const std::vector<double>& u) const {
    const FieldNorms n = field_norms(*mesh_, u, keep_kind(Region::Membrane));
    return n.l2 * n.l2 + n.h1_semi * n.h1_semi;
}

double ThickOperators::lumped_l2sq(const std::vector<double>& f_nodal) const {
    const std::vector<double> load = lumped_load(*mesh_, f_nodal);
    double s = 0.0;
    for (std::size_t p = 0; p < load.size(); ++p) s += load[p] * f_nodal[p];
    return s;
}

double ThickOperators::stability_ratio() const {
    if (!(cfg_.delta > 0.0)) return -1.0;
    return cfg_.dt * std::max(cfg_.sigma_int, cfg_.sigma_out) / cfg_.delta;
}

namespace {

// `f_data` is the source at the level's own time (norms, energy audits);
// `f_flux` is the load of the step that produced the state, which is what the
// per-component flux balance is checked against. At level 0 both are f(0) and
// the residual reports how far the initial extension sits from balance.
ThickLevel make_thick_level(const ThickOperators& ops, double t,
                            const std::vector<double>& u,
                            const std::vector<double>& f_data,
                            const std::vector<double>& f_flux) {
    ThickLevel lv;
    lv.t = t;
    const FluxCondition fc = ops.flux_condition(u, f_flux);
    lv.flux_residual = fc.residual;
    lv.flux_scale = fc.scale;
    lv.membrane_grad_energy = ops.membrane_grad_energy(u);
    lv.conductor_grad_energy = ops.conductor_grad_energy(u);
    lv.capacity_energy = ops.capacity_energy(u);
    lv.f_l2sq = ops.lumped_l2sq(f_data);
    return lv;
}

void run_thick_picard(const ThickOperators& ops, const std::vector<std::vector<double>>& f,
                      ThickResult& out) {
    const ThickConfig& cfg = ops.config();
    const int k_end = static_cast<int>(out.times.size()) - 1;
    const int window_steps = checked_steps(cfg.window, cfg.dt, "fixed-point window");

    int a = 0;
    int cur_steps = window_steps;
    while (a < k_end) {
        int halvings_here = 0;
        for (;;) {
            const int b = std::min(a + cur_steps, k_end);
            const std::vector<double>& u_start = out.history[a];

            // Initial iterate: the window-start state frozen in time.
            std::vector<std::vector<double>> cur(b - a + 1, u_start);

            WindowReport report;
            report.t_start = out.times[a];
            report.t_end = out.times[b];
            report.window_used = out.times[b] - out.times[a];
            report.halvings = halvings_here;

            bool converged = false;
            bool stalled = false;
            int high_ratio_streak = 0;
            std::vector<std::vector<double>> next(b - a + 1);

            while (report.sweeps < cfg.max_sweeps) {
                ++report.sweeps;
                next[0] = u_start;
                std::vector<double> acc = u_start;
                for (int k = a; k < b; ++k) {
                    // Velocity at the step's right node: the fixed point then
                    // satisfies u_{k+1} = u_k + dt v(u_{k+1}), i.e. exactly the
                    // implicit trajectory, and the iteration contracts only
                    // while dt*sigma/delta stays moderate, which is what makes
                    // the adaptive window meaningful.
                    const std::vector<double> v = ops.velocity(cur[k - a + 1], f[k]);
                    for (std::size_t p = 0; p < acc.size(); ++p)
                        acc[p] += cfg.dt * v[p];
                    next[k - a + 1] = acc;
                }

                double res = 0.0;
                for (int k = a; k <= b; ++k) {
                    std::vector<double> diff = next[k - a];
                    for (std::size_t p = 0; p < diff.size(); ++p)
                        diff[p] -= cur[k - a][p];
                    res = std::max(res, ops.bulk_h1_norm(diff));
                }
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
                for (int k = a; k <= b; ++k) out.history[k] = cur[k - a];
                out.windows.push_back(std::move(report));
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
}

}  // namespace

ThickResult run_thick(const ThickOperators& ops, const TimeSampler& f,
                      const std::vector<double>& u0_nodal) {
    const ThickConfig& cfg = ops.config();
    const int k_end = checked_steps(cfg.t_end, cfg.dt, "final time");

    ThickResult out;
    out.times.resize(k_end + 1);
    for (int k = 0; k <= k_end; ++k) out.times[k] = cfg.dt * k;

    std::vector<std::vector<double>> f_all(k_end + 1);
    for (int k = 0; k <= k_end; ++k) f_all[k] = f(out.times[k]);

    const ExtensionReport ext = ops.extend_initial(u0_nodal);
    out.extension_ratio = ext.norm_ratio;
    out.history.resize(k_end + 1);
    out.history[0] = ext.field;

    if (cfg.scheme == ThickScheme::Explicit && ops.stability_ratio() > 2.0)
        out.warnings.push_back(
            "explicit step ratio dt*max(sigma)/delta = " +
            std::to_string(ops.stability_ratio()) +
            " exceeds the stability heuristic; expect oscillations");

    if (cfg.scheme == ThickScheme::Picard) {
        run_thick_picard(ops, f_all, out);
    } else {
        for (int k = 0; k < k_end; ++k) {
            if (cfg.scheme == ThickScheme::Implicit) {
                out.history[k + 1] = ops.step_implicit(out.history[k], f_all[k]);
            } else {
                const std::vector<double> v = ops.velocity(out.history[k], f_all[k]);
                out.history[k + 1] = out.history[k];
                for (std::size_t p = 0; p < v.size(); ++p)
                    out.history[k + 1][p] += cfg.dt * v[p];
            }
        }
    }

    for (int k = 0; k <= k_end; ++k) {
        out.levels.push_back(make_thick_level(ops, out.times[k], out.history[k], f_all[k],
                                              f_all[k > 0 ? k - 1 : 0]));
        if (std::find(cfg.dump_levels.begin(), cfg.dump_levels.end(), k) !=
            cfg.dump_levels.end())
            out.dumps.emplace_back(k, out.history[k]);
    }
    return out;
}

ThickEnergyAudit thick_energy_audit(const ThickOperators& ops, const ThickResult& result) {
    ThickEnergyAudit audit;
    const int k_end = static_cast<int>(result.levels.size()) - 1;
    if (k_end < 0) return audit;
    const double dt = ops.config().dt;

    double memb_sup = 0.0, cond_sum = 0.0, f_sq = 0.0;
    for (int k = 0; k <= k_end; ++k) {
        memb_sup = std::max(memb_sup, result.levels[k].membrane_grad_energy);
        if (k < k_end) {
            cond_sum += dt * result.levels[k].conductor_grad_energy;
            f_sq += dt * result.levels[k].f_l2sq;
        }
    }
    audit.lhs = memb_sup + cond_sum;
    audit.rhs = f_sq + ops.membrane_h1sq(result.history.front());
    audit.ratio = audit.rhs > 0.0 ? audit.lhs / audit.rhs : 0.0;
    return audit;
}

std::vector<DeltaStudyRow> delta_study(const Mesh& mesh, const ThickConfig& base,
                                       const std::vector<double>& deltas,
                                       const TimeSampler& f,
                                       const std::vector<double>& u0_nodal, int threads) {
    if (deltas.empty()) throw ConfigError("delta study needs a nonempty delta list");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0))
            throw ConfigError("delta study entries must be positive");
        if (i > 0 && !(deltas[i] < deltas[i - 1]))
            throw ConfigError("delta study list must be strictly decreasing");
    }

    ThickConfig limit_cfg = base;
    limit_cfg.scheme = ThickScheme::Implicit;
    limit_cfg.delta = 0.0;
    const ThickOperators limit_ops(mesh, limit_cfg);
    const ThickResult limit = run_thick(limit_ops, f, u0_nodal);

    auto job = [&](double delta) {
        ThickConfig cfg = base;
        cfg.scheme = ThickScheme::Implicit;
        cfg.delta = delta;
        const ThickOperators ops(mesh, cfg);
        const ThickResult res = run_thick(ops, f, u0_nodal);

        DeltaStudyRow row;
        row.delta = delta;
        double dist_sq = 0.0;
        const int k_end = static_cast<int>(res.history.size()) - 1;
        for (int k = 0; k < k_end; ++k) {
            std::vector<double> diff = res.history[k];
            for (std::size_t p = 0; p < diff.size(); ++p) diff[p] -= limit.history[k][p];
            const double h1 = ops.bulk_h1_norm(diff);
            dist_sq += cfg.dt * h1 * h1;
        }
        row.distance_h1 = std::sqrt(dist_sq);
        const ThickEnergyAudit audit = thick_energy_audit(ops, res);
        row.energy_lhs = audit.lhs;
        row.energy_rhs = audit.rhs;
        row.energy_ratio = audit.ratio;
        return row;
    };

    std::vector<DeltaStudyRow> rows;
    if (threads > 1) {
        std::vector<std::future<DeltaStudyRow>> futures;
        for (double d : deltas)
            futures.push_back(std::async(std::launch::async, job, d));
        for (auto& fu : futures) rows.push_back(fu.get());
    } else {
        for (double d : deltas) rows.push_back(job(d));
    }
    return rows;
}

ConcentrationResult concentration_run(const Mesh& thin_mesh, const ThickConfig& base,
                                      const std::vector<int>& k_list, const TimeSampler& f,
                                      const std::function<double(double, double)>& u0_fn,
                                      const std::vector<double>& sample_times,
                                      int threads) {
    if (thin_mesh.has_membrane())
        throw GeometryError("concentration study starts from a thin mesh");
    if (k_list.empty()) throw ConfigError("concentration study needs band widths");
    if (sample_times.empty()) throw ConfigError("concentration study needs sample times");

    ThinOperators thin_ops(thin_mesh, base.sigma_int, base.sigma_out, base.tols);
    ThinConfig thin_cfg;
    thin_cfg.scheme = ThinScheme::Marching;
    thin_cfg.alpha = base.alpha;
    thin_cfg.dt = base.dt;
    thin_cfg.t_end = base.t_end;
    const TraceField u0_trace = sample_trace(thin_mesh, u0_fn);
    const ThinResult thin = run_thin(thin_ops, thin_cfg, f, u0_trace);
    const int k_end = static_cast<int>(thin.times.size()) - 1;

    std::vector<int> sample_levels;
    for (double t : sample_times) {
        const int k = static_cast<int>(std::lround(t / base.dt));
        if (k < 0 || k > k_end)
            throw ConfigError("concentration sample time outside the run interval");
        sample_levels.push_back(k);
    }

    auto job = [&](int band_k) {
        Mesh mesh = thin_mesh;
        thicken_interfaces(mesh, band_k);
        ThickConfig cfg = base;
        cfg.scheme = ThickScheme::Implicit;
        cfg.delta = 0.0;
        cfg.concentration_scaling = true;
        const ThickOperators ops(mesh, cfg);
        const ThickResult res = run_thick(ops, f, sample_nodes(mesh, u0_fn));

        std::vector<std::pair<double, double>> gaps;  // (t, gap)
        for (int lvl : sample_levels) {
            TraceField diff = thin.h[lvl];
            for (std::size_t c = 0; c < thin_mesh.loops.size(); ++c) {
                const auto& nodes = thin_mesh.loops[c].nodes;
                for (std::size_t j = 0; j < nodes.size(); ++j)
                    diff.comp[c][j] = res.history[lvl][nodes[j]] - diff.comp[c][j];
            }
            gaps.emplace_back(thin.times[lvl], surface_l2_norm(thin_ops.surface(), diff));
        }
        return std::make_pair(mesh.eta, gaps);
    };

    using JobOut = std::pair<double, std::vector<std::pair<double, double>>>;
    std::vector<JobOut> outs;
    if (threads > 1) {
        std::vector<std::future<JobOut>> futures;
        for (int bk : k_list) futures.push_back(std::async(std::launch::async, job, bk));
        for (auto& fu : futures) outs.push_back(fu.get());
    } else {
        for (int bk : k_list) outs.push_back(job(bk));
    }

    ConcentrationResult result;
    for (const JobOut& o : outs) {
        result.etas.push_back(o.first);
        double worst = 0.0;
        for (const auto& [t, gap] : o.second) {
            result.rows.push_back({o.first, t, gap});
            worst = std::max(worst, gap);
        }
        result.summary.push_back(worst);
    }
    return result;
}

}  // namespace memfem
