#include "memfem/run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "memfem/errors.hpp"
#include "memfem/mesh_io.hpp"

namespace memfem {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Mesh build_mesh_from_config(const RunConfig& cfg) {
    Mesh mesh = build_square_mesh(cfg.n);
    embed_inclusions(mesh, cfg.boxes);
    if (cfg.thicken_k > 0) thicken_interfaces(mesh, cfg.thicken_k);
    return mesh;
}

ThinConfig thin_config_from(const RunConfig& cfg) {
    ThinConfig tc;
    tc.scheme = cfg.scheme == "picard" ? ThinScheme::Picard : ThinScheme::Marching;
    tc.alpha = cfg.alpha;
    tc.dt = cfg.dt;
    tc.t_end = cfg.t_end;
    tc.window = cfg.window;
    tc.picard_tol = cfg.picard_tol;
    tc.max_sweeps = cfg.max_sweeps;
    tc.dump_levels = dump_levels_from(cfg);
    return tc;
}

ThickConfig thick_config_from(const RunConfig& cfg) {
    ThickConfig tc;
    if (cfg.scheme == "explicit")
        tc.scheme = ThickScheme::Explicit;
    else if (cfg.scheme == "picard")
        tc.scheme = ThickScheme::Picard;
    else
        tc.scheme = ThickScheme::Implicit;
    tc.delta = cfg.delta;
    tc.alpha = cfg.alpha;
    tc.sigma_int = cfg.sigma_int;
    tc.sigma_out = cfg.sigma_out;
    tc.dt = cfg.dt;
    tc.t_end = cfg.t_end;
    tc.window = cfg.window;
    tc.picard_tol = cfg.picard_tol;
    tc.max_sweeps = cfg.max_sweeps;
    tc.dump_levels = dump_levels_from(cfg);
    tc.tols.cg_tol = cfg.cg_tol;
    tc.tols.cg_max_iter = cfg.cg_max_iter;
    tc.tols.compat_tol = cfg.compat_tol;
    return tc;
}

TimeSampler make_sampler(const Mesh& mesh, const Expr& f) {
    return [&mesh, f](double t) {
        return sample_nodes(mesh, [&f, t](double x, double y) { return f.eval(x, y, t); });
    };
}

std::vector<int> dump_levels_from(const RunConfig& cfg) {
    std::vector<int> levels;
    for (double t : cfg.dump_times)
        levels.push_back(static_cast<int>(std::lround(t / cfg.dt)));
    return levels;
}

namespace {

CouplingTols tols_from(const RunConfig& cfg) {
    CouplingTols t;
    t.cg_tol = cfg.cg_tol;
    t.cg_max_iter = cfg.cg_max_iter;
    t.compat_tol = cfg.compat_tol;
    return t;
}

std::string field_csv(const Mesh& mesh, const std::vector<double>& u) {
    std::ostringstream out;
    out << "node,x,y,value\n";
    for (std::size_t p = 0; p < mesh.nodes.size(); ++p) {
        out << p << ',' << format_value(mesh.nodes[p].x) << ','
            << format_value(mesh.nodes[p].y) << ',' << format_value(u[p]) << '\n';
    }
    return out.str();
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_dumps(const Mesh& mesh,
                 const std::vector<std::pair<int, std::vector<double>>>& dumps,
                 const std::string& out_dir, RunArtifacts& art) {
    for (const auto& [level, field] : dumps) {
        const std::string name = "field_" + std::to_string(level) + ".csv";
        write_text_atomic(join_path(out_dir, name), field_csv(mesh, field));
        art.files.push_back(name);
    }
}

std::string summarize_constants(const std::vector<double>& c) {
    std::string s = "[";
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) s += ' ';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", c[i]);
        s += buf;
    }
    return s + "]";
}

RunArtifacts run_thin_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    const Mesh mesh = build_mesh_from_config(cfg);
    const ThinOperators ops(mesh, cfg.sigma_int, cfg.sigma_out, tols_from(cfg));
    const Expr f = Expr::parse(cfg.f_expr);
    const Expr u0 = Expr::parse(cfg.u0_expr);
    const TraceField u0_trace =
        sample_trace(mesh, [&u0](double x, double y) { return u0.eval(x, y, 0.0); });

    const ThinResult res = run_thin(ops, thin_config_from(cfg), make_sampler(mesh, f),
                                    u0_trace);

    std::ostringstream csv;
    csv << "t,component,ell,c,total_jump_flux,bulk_energy,surface_grad_energy\n";
    double max_jump = 0.0;
    for (const ThinLevel& lv : res.levels) {
        for (std::size_t i = 0; i < lv.ell.size(); ++i) {
            max_jump = std::max(max_jump, std::abs(lv.jump_total[i]));
            csv << format_value(lv.t) << ',' << (i + 1) << ','
                << format_value(lv.ell[i]) << ',' << format_value(lv.c[i]) << ','
                << format_value(lv.jump_total[i]) << ','
                << format_value(lv.bulk_energy) << ','
                << format_value(lv.surface_grad_energy) << '\n';
        }
    }

    RunArtifacts art;
    write_text_atomic(join_path(out_dir, "thin.csv"), csv.str());
    art.files.push_back("thin.csv");
    write_dumps(mesh, res.dumps, out_dir, art);

    const ThinLevel& last = res.levels.back();
    std::ostringstream sum;
    sum << "thin " << cfg.scheme << ": levels=" << res.levels.size()
        << " bulk_energy=" << format_value(last.bulk_energy)
        << " surface_grad_energy=" << format_value(last.surface_grad_energy)
        << " max_jump_flux=" << format_value(max_jump)
        << " c0=" << summarize_constants(res.levels.front().c) << " seed=" << cfg.seed;
    if (!res.windows.empty())
        sum << " windows=" << res.windows.size() << " halvings=" << res.total_halvings;
    art.summary = sum.str();
    return art;
}

RunArtifacts run_thick_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    const Mesh mesh = build_mesh_from_config(cfg);
    ThickConfig tc = thick_config_from(cfg);
    const ThickOperators ops(mesh, tc);
    const Expr f = Expr::parse(cfg.f_expr);
    const Expr u0 = Expr::parse(cfg.u0_expr);

    const ThickResult res =
        run_thick(ops, make_sampler(mesh, f),
                  sample_nodes(mesh, [&u0](double x, double y) { return u0.eval(x, y, 0.0); }));

    std::ostringstream csv;
    csv << "t,component,flux_residual,membrane_grad_energy,conductor_grad_energy,"
           "capacity_energy\n";
    double max_res = 0.0;
    for (const ThickLevel& lv : res.levels) {
        for (std::size_t i = 0; i < lv.flux_residual.size(); ++i) {
            max_res = std::max(max_res, lv.flux_residual[i]);
            csv << format_value(lv.t) << ',' << (i + 1) << ','
                << format_value(lv.flux_residual[i]) << ','
                << format_value(lv.membrane_grad_energy) << ','
                << format_value(lv.conductor_grad_energy) << ','
                << format_value(lv.capacity_energy) << '\n';
        }
    }

    RunArtifacts art;
    write_text_atomic(join_path(out_dir, "thick.csv"), csv.str());
    art.files.push_back("thick.csv");
    write_dumps(mesh, res.dumps, out_dir, art);

    const ThickLevel& last = res.levels.back();
    std::ostringstream sum;
    sum << "thick " << cfg.scheme << ": levels=" << res.levels.size()
        << " membrane_grad_energy=" << format_value(last.membrane_grad_energy)
        << " capacity_energy=" << format_value(last.capacity_energy)
        << " max_flux_residual=" << format_value(max_res)
        << " extension_ratio=" << format_value(res.extension_ratio)
        << " seed=" << cfg.seed;
    if (!res.windows.empty())
        sum << " windows=" << res.windows.size() << " halvings=" << res.total_halvings;
    for (const std::string& w : res.warnings) sum << " warning: " << w;
    art.summary = sum.str();
    return art;
}

RunArtifacts run_delta_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    const Mesh mesh = build_mesh_from_config(cfg);
    ThickConfig tc = thick_config_from(cfg);
    const Expr f = Expr::parse(cfg.f_expr);
    const Expr u0 = Expr::parse(cfg.u0_expr);

    const std::vector<DeltaStudyRow> rows =
        delta_study(mesh, tc, cfg.delta_list, make_sampler(mesh, f),
                    sample_nodes(mesh, [&u0](double x, double y) { return u0.eval(x, y, 0.0); }),
                    cfg.threads);

    std::ostringstream csv;
    csv << "delta,distance_h1,energy_lhs,energy_rhs,energy_ratio\n";
    for (const DeltaStudyRow& r : rows) {
        csv << format_value(r.delta) << ',' << format_value(r.distance_h1) << ','
            << format_value(r.energy_lhs) << ',' << format_value(r.energy_rhs) << ','
            << format_value(r.energy_ratio) << '\n';
    }

    RunArtifacts art;
    write_text_atomic(join_path(out_dir, "delta_study.csv"), csv.str());
    art.files.push_back("delta_study.csv");

    std::ostringstream sum;
    sum << "delta_study: runs=" << rows.size()
        << " smallest_delta_distance=" << format_value(rows.back().distance_h1)
        << " energy_ratio_spread=["
        << format_value(rows.front().energy_ratio) << ".."
        << format_value(rows.back().energy_ratio) << "] seed=" << cfg.seed;
    art.summary = sum.str();
    return art;
}

RunArtifacts run_concentration_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    const Mesh mesh = build_mesh_from_config(cfg);
    ThickConfig tc = thick_config_from(cfg);
    const Expr f = Expr::parse(cfg.f_expr);
    const Expr u0 = Expr::parse(cfg.u0_expr);

    const ConcentrationResult res = concentration_run(
        mesh, tc, cfg.eta_cells, make_sampler(mesh, f),
        [&u0](double x, double y) { return u0.eval(x, y, 0.0); }, cfg.sample_times,
        cfg.threads);

    std::ostringstream csv;
    csv << "eta,t,trace_gap\n";
    for (const ConcentrationRow& r : res.rows) {
        csv << format_value(r.eta) << ',' << format_value(r.t) << ','
            << format_value(r.trace_gap) << '\n';
    }

    RunArtifacts art;
    write_text_atomic(join_path(out_dir, "concentration.csv"), csv.str());
    art.files.push_back("concentration.csv");

    std::ostringstream sum;
    sum << "concentration: thicknesses=" << res.etas.size() << " summary=[";
    for (std::size_t i = 0; i < res.summary.size(); ++i) {
        if (i) sum << ' ';
        sum << format_value(res.summary[i]);
    }
    sum << "] seed=" << cfg.seed;
    art.summary = sum.str();
    return art;
}

}  // namespace

RunArtifacts run_pipeline(const RunConfig& cfg, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw WriteError("cannot create output directory " + out_dir);

    RunArtifacts art;
    if (cfg.problem == "thin")
        art = run_thin_pipeline(cfg, out_dir);
    else if (cfg.problem == "thick")
        art = run_thick_pipeline(cfg, out_dir);
    else if (cfg.problem == "delta_study")
        art = run_delta_pipeline(cfg, out_dir);
    else if (cfg.problem == "concentration")
        art = run_concentration_pipeline(cfg, out_dir);
    else
        throw ConfigError("unknown problem kind " + cfg.problem);

    write_text_atomic(join_path(out_dir, "run_meta.json"), serialize_config(cfg));
    art.files.push_back("run_meta.json");
    return art;
}

}  // namespace memfem
