// Command-line front end: mesh generation, the four pipelines, and the
// verification suite. Exit codes: 0 success, 2 config error, 3 numerical
// invariant failure, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "memfem/checks.hpp"
#include "memfem/config.hpp"
#include "memfem/errors.hpp"
#include "memfem/mesh_io.hpp"
#include "memfem/run.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    int threads = 0;  // 0: take the config's value
    std::string level = "quick";
};

memfem::RunConfig load_for(const std::string& expected_problem, const CliOptions& opt) {
    memfem::RunConfig cfg = memfem::load_config(opt.config_path);
    if (cfg.problem != expected_problem)
        throw memfem::ConfigError("config selects problem '" + cfg.problem +
                                  "' but the subcommand expects '" + expected_problem + "'");
    if (opt.threads > 0) cfg.threads = opt.threads;
    return cfg;
}

int do_run(const std::string& expected_problem, const CliOptions& opt) {
    auto cfg = load_for(expected_problem, opt);
    auto artifacts = memfem::run_pipeline(cfg, opt.out_dir);
    std::cout << artifacts.summary << "\n";
    for (const auto& f : artifacts.files)
        std::cout << "wrote " << opt.out_dir << "/" << f << "\n";
    return 0;
}

int do_mesh(const CliOptions& opt) {
    memfem::RunConfig cfg = memfem::load_config(opt.config_path);
    memfem::Mesh mesh = memfem::build_mesh_from_config(cfg);
    std::filesystem::create_directories(opt.out_dir);
    const std::string path = opt.out_dir + "/mesh.txt";
    memfem::write_mesh(mesh, path);
    std::cout << "mesh n=" << mesh.n << " nodes=" << mesh.nodes.size()
              << " triangles=" << mesh.tris.size() << " components=" << mesh.components();
    if (mesh.has_membrane()) std::cout << " eta=" << memfem::format_value(mesh.eta);
    std::cout << "\n";
    std::cout << "wrote " << path << "\n";
    return 0;
}

int do_verify(const CliOptions& opt) {
    const auto level =
        (opt.level == "full") ? memfem::CheckLevel::Full : memfem::CheckLevel::Quick;
    std::string scratch = opt.out_dir.empty() ? std::string("out") : opt.out_dir;
    scratch += "/verify_scratch";

    auto report = memfem::run_invariant_checks(level);
    auto acceptance = memfem::run_acceptance_checks(level, scratch);
    report.insert(report.end(), acceptance.begin(), acceptance.end());

    int failed = 0;
    for (const auto& check : report) {
        std::cout << (check.passed ? "PASS " : "FAIL ") << check.name;
        if (!check.detail.empty()) std::cout << "  [" << check.detail << "]";
        std::cout << "\n";
        if (!check.passed) ++failed;
    }
    std::cout << report.size() - failed << "/" << report.size() << " checks passed ("
              << (level == memfem::CheckLevel::Full ? "full" : "quick") << ")\n";
    return failed == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled bulk/interface conduction simulation suite"};
    app.require_subcommand(1);

    CliOptions opt;

    auto add_common = [&opt](CLI::App* cmd, bool needs_config) {
        auto* c = cmd->add_option("--config", opt.config_path, "JSON run configuration");
        if (needs_config) c->required();
        cmd->add_option("--out", opt.out_dir, "output directory (default: out)");
        cmd->add_option("--threads", opt.threads, "worker threads, overrides the config");
    };

    auto* mesh_cmd = app.add_subcommand("mesh", "build the configured mesh and write it");
    add_common(mesh_cmd, true);
    auto* thin_cmd = app.add_subcommand("run-thin", "run the interface-evolution problem");
    add_common(thin_cmd, true);
    auto* thick_cmd = app.add_subcommand("run-thick", "run the band-membrane problem");
    add_common(thick_cmd, true);
    auto* conc_cmd =
        app.add_subcommand("concentration", "band-to-interface concentration study");
    add_common(conc_cmd, true);
    auto* delta_cmd =
        app.add_subcommand("delta-study", "conductor-capacity limit study");
    add_common(delta_cmd, true);
    auto* verify_cmd = app.add_subcommand("verify", "run the verification suites");
    add_common(verify_cmd, false);
    verify_cmd->add_option("--level", opt.level, "quick or full")
        ->check(CLI::IsMember({"quick", "full"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        // CLI11 exits 0 for --help; anything else is a usage problem.
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(mesh_cmd)) return do_mesh(opt);
        if (app.got_subcommand(thin_cmd)) return do_run("thin", opt);
        if (app.got_subcommand(thick_cmd)) return do_run("thick", opt);
        if (app.got_subcommand(conc_cmd)) return do_run("concentration", opt);
        if (app.got_subcommand(delta_cmd)) return do_run("delta_study", opt);
        if (app.got_subcommand(verify_cmd)) return do_verify(opt);
    } catch (const memfem::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return memfem::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
