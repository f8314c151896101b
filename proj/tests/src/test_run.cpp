#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "memfem/config.hpp"
#include "memfem/run.hpp"

using namespace memfem;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& leaf) {
    const fs::path dir = fs::path(MEMFEM_SCRATCH_DIR) / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

// Splits one CSV row; all our tables are plain comma-separated numerics.
std::vector<std::string> cells_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) out.push_back(cell);
    return out;
}

RunConfig thin_cfg() {
    RunConfig cfg = parse_config(R"({
      "problem": "thin",
      "mesh": {"n": 8, "boxes": [[0.25, 0.25, 0.75, 0.75]], "thicken_k": 0},
      "time": {"t_end": 0.04, "dt": 0.02, "scheme": "marching"}
    })");
    return cfg;
}

bool no_tmp_left(const std::string& dir) {
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().string().find(".tmp") != std::string::npos) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("thin pipeline writes its artifact set in order") {
    RunConfig cfg = thin_cfg();
    cfg.f_expr = "1+x";
    cfg.u0_expr = "x*y";
    cfg.dump_times = {0.0, 0.04};
    const std::string dir = scratch("run_thin_artifacts");

    RunArtifacts art = run_pipeline(cfg, dir);
    REQUIRE(art.files.size() == 4);
    CHECK(art.files[0] == "thin.csv");
    CHECK(art.files[1] == "field_0.csv");
    CHECK(art.files[2] == "field_2.csv");  // t_end / dt = 2 levels
    CHECK(art.files.back() == "run_meta.json");
    for (const std::string& f : art.files) CHECK(fs::exists(fs::path(dir) / f));
    CHECK(no_tmp_left(dir));

    CHECK(art.summary.rfind("thin marching:", 0) == 0);
    CHECK(art.summary.find("seed=12345") != std::string::npos);
    CHECK(art.summary.find("windows=") == std::string::npos);  // marching run

    // The config echo is the canonical serialization of what actually ran.
    CHECK(slurp(dir + "/run_meta.json") == serialize_config(cfg));

    // Field dumps carry one row per mesh node.
    const Mesh mesh = build_mesh_from_config(cfg);
    const auto dump = lines_of(slurp(dir + "/field_0.csv"));
    REQUIRE(dump.size() == mesh.nodes.size() + 1);
    CHECK(dump[0] == "node,x,y,value");
    const auto row = cells_of(dump[1]);
    REQUIRE(row.size() == 4);
    CHECK(row[0] == "0");
}

TEST_CASE("thin csv header and column count are pinned") {
    RunConfig cfg = thin_cfg();
    cfg.f_expr = "x+y";
    const std::string dir = scratch("run_thin_header");
    run_pipeline(cfg, dir);

    const auto rows = lines_of(slurp(dir + "/thin.csv"));
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == "t,component,ell,c,total_jump_flux,bulk_energy,surface_grad_energy");
    // 3 levels (t = 0, 0.02, 0.04), one component.
    CHECK(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(cells_of(rows[i]).size() == 7);
    CHECK(cells_of(rows[1])[1] == "1");  // components are 1-based
}

TEST_CASE("zero data produces an all-zero thin table") {
    RunConfig cfg = thin_cfg();  // f_expr and u0_expr default to "0"
    const std::string dir = scratch("run_thin_zero");
    run_pipeline(cfg, dir);

    const auto rows = lines_of(slurp(dir + "/thin.csv"));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto cells = cells_of(rows[i]);
        for (std::size_t j = 2; j < cells.size(); ++j) {
            CHECK(std::abs(std::stod(cells[j])) <= 1e-14);
        }
    }
}

TEST_CASE("thick pipeline artifacts") {
    RunConfig cfg = parse_config(R"({
      "problem": "thick",
      "mesh": {"n": 8, "boxes": [[0.25, 0.25, 0.75, 0.75]], "thicken_k": 1},
      "physics": {"delta": 0.1},
      "time": {"t_end": 0.04, "dt": 0.02, "scheme": "implicit"},
      "f_expr": "1",
      "u0_expr": "x"
    })");
    const std::string dir = scratch("run_thick_artifacts");

    RunArtifacts art = run_pipeline(cfg, dir);
    REQUIRE(!art.files.empty());
    CHECK(art.files[0] == "thick.csv");
    CHECK(art.files.back() == "run_meta.json");
    CHECK(art.summary.rfind("thick implicit:", 0) == 0);
    CHECK(art.summary.find("extension_ratio=") != std::string::npos);
    CHECK(no_tmp_left(dir));

    const auto rows = lines_of(slurp(dir + "/thick.csv"));
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] ==
          "t,component,flux_residual,membrane_grad_energy,conductor_grad_energy,"
          "capacity_energy");
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(cells_of(rows[i]).size() == 6);
}

TEST_CASE("delta study pipeline artifacts") {
    RunConfig cfg = parse_config(R"({
      "problem": "delta_study",
      "mesh": {"n": 8, "boxes": [[0.25, 0.25, 0.75, 0.75]], "thicken_k": 1},
      "time": {"t_end": 0.04, "dt": 0.02, "scheme": "implicit"},
      "delta_list": [0.1, 0.01],
      "f_expr": "1",
      "u0_expr": "x*y"
    })");
    const std::string dir = scratch("run_delta_artifacts");

    RunArtifacts art = run_pipeline(cfg, dir);
    CHECK(std::find(art.files.begin(), art.files.end(), "delta_study.csv") !=
          art.files.end());
    CHECK(art.files.back() == "run_meta.json");

    const auto rows = lines_of(slurp(dir + "/delta_study.csv"));
    CHECK(rows[0] == "delta,distance_h1,energy_lhs,energy_rhs,energy_ratio");
    CHECK(rows.size() == 1 + cfg.delta_list.size());
    CHECK(cells_of(rows[1])[0] == format_value(0.1));
}

TEST_CASE("concentration pipeline artifacts") {
    RunConfig cfg = parse_config(R"({
      "problem": "concentration",
      "mesh": {"n": 8, "boxes": [[0.25, 0.25, 0.75, 0.75]], "thicken_k": 0},
      "time": {"t_end": 0.04, "dt": 0.02, "scheme": "marching"},
      "eta_cells": [1],
      "f_expr": "1+x",
      "u0_expr": "0"
    })");
    const std::string dir = scratch("run_conc_artifacts");

    RunArtifacts art = run_pipeline(cfg, dir);
    CHECK(std::find(art.files.begin(), art.files.end(), "concentration.csv") !=
          art.files.end());

    const auto rows = lines_of(slurp(dir + "/concentration.csv"));
    CHECK(rows[0] == "eta,t,trace_gap");
    // One band width, two default sample times.
    CHECK(rows.size() == 3);
    CHECK(cells_of(rows[1])[0] == format_value(2.0 / 8.0 * 1.0));
}

TEST_CASE("dump level mapping and value formatting") {
    RunConfig cfg = thin_cfg();
    cfg.t_end = 0.1;
    cfg.dt = 0.01;
    cfg.dump_times = {0.0, 0.05, 0.1};
    const std::vector<int> levels = dump_levels_from(cfg);
    REQUIRE(levels.size() == 3);
    CHECK(levels[0] == 0);
    CHECK(levels[1] == 5);
    CHECK(levels[2] == 10);

    CHECK(format_value(1.0) == "1");
    CHECK(format_value(0.5) == "0.5");
    CHECK(format_value(0.1) == "0.10000000000000001");
    CHECK(format_value(-2.0) == "-2");
}
