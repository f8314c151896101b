// Drives the installed command-line tool as a child process and checks exit
// codes, artifacts, and rerun determinism. The binary path and a scratch
// directory come in through compile definitions.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kTool = MEMFEM_TOOL_PATH;

std::string scratch(const std::string& leaf) {
    const fs::path dir = fs::path(MEMFEM_SCRATCH_DIR) / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

int run_cmd(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kThinConfig = R"({
  "problem": "thin",
  "mesh": {"n": 8, "boxes": [[0.25, 0.25, 0.75, 0.75]], "thicken_k": 0},
  "time": {"t_end": 0.04, "dt": 0.02, "scheme": "marching"},
  "f_expr": "1+x",
  "u0_expr": "x*y"
})";

}  // namespace

TEST_CASE("help exits cleanly") {
    CHECK(run_cmd(kTool + " --help > /dev/null 2>&1") == 0);
}

TEST_CASE("a subcommand is required") {
    CHECK(run_cmd(kTool + " > /dev/null 2>&1") == 2);
    CHECK(run_cmd(kTool + " frobnicate > /dev/null 2>&1") == 2);
    CHECK(run_cmd(kTool + " run-thin > /dev/null 2>&1") == 2);  // missing --config
}

TEST_CASE("run-thin produces artifacts and reruns byte-identically") {
    const std::string dir = scratch("cli_thin");
    const std::string cfg = dir + "/cfg.json";
    write_file(cfg, kThinConfig);

    const std::string log = dir + "/log.txt";
    CHECK(run_cmd(kTool + " run-thin --config " + cfg + " --out " + dir + "/a > " +
                  log + " 2>&1") == 0);
    CHECK(fs::exists(dir + "/a/thin.csv"));
    CHECK(fs::exists(dir + "/a/run_meta.json"));

    const std::string printed = slurp(log);
    CHECK(printed.find("thin marching:") != std::string::npos);
    CHECK(printed.find("wrote " + dir + "/a/thin.csv") != std::string::npos);

    CHECK(run_cmd(kTool + " run-thin --config " + cfg + " --out " + dir +
                  "/b > /dev/null 2>&1") == 0);
    CHECK(slurp(dir + "/a/thin.csv") == slurp(dir + "/b/thin.csv"));
    CHECK(slurp(dir + "/a/run_meta.json") == slurp(dir + "/b/run_meta.json"));
}

TEST_CASE("mesh subcommand writes a readable mesh file") {
    const std::string dir = scratch("cli_mesh");
    const std::string cfg = dir + "/cfg.json";
    write_file(cfg, kThinConfig);

    CHECK(run_cmd(kTool + " mesh --config " + cfg + " --out " + dir +
                  "/m > /dev/null 2>&1") == 0);
    REQUIRE(fs::exists(dir + "/m/mesh.txt"));
    const std::string text = slurp(dir + "/m/mesh.txt");
    CHECK(text.find("meta grid_h") != std::string::npos);
    CHECK(text.find("\nloop 1 ") != std::string::npos);
}

TEST_CASE("problem kind must match the subcommand") {
    const std::string dir = scratch("cli_mismatch");
    const std::string cfg = dir + "/cfg.json";
    write_file(cfg, kThinConfig);
    CHECK(run_cmd(kTool + " run-thick --config " + cfg + " --out " + dir +
                  "/x > /dev/null 2>&1") == 2);
}

TEST_CASE("malformed or missing configs map to exit codes") {
    const std::string dir = scratch("cli_badcfg");
    const std::string cfg = dir + "/broken.json";
    write_file(cfg, "{\"problem\": \"thin\",");
    CHECK(run_cmd(kTool + " run-thin --config " + cfg + " > /dev/null 2>&1") == 2);
    CHECK(run_cmd(kTool + " run-thin --config " + dir +
                  "/nope.json > /dev/null 2>&1") == 4);
}

TEST_CASE("a failed fixed-point run exits with the numeric code") {
    const std::string dir = scratch("cli_numeric");
    const std::string cfg = dir + "/cfg.json";
    write_file(cfg, R"({
      "problem": "thin",
      "mesh": {"n": 8, "boxes": [[0.25, 0.25, 0.75, 0.75]], "thicken_k": 0},
      "physics": {"alpha": 1e-4},
      "time": {"t_end": 0.04, "dt": 0.02, "scheme": "picard", "window": 0.04,
               "max_sweeps": 60},
      "f_expr": "1+x",
      "u0_expr": "x*y"
    })");
    CHECK(run_cmd(kTool + " run-thin --config " + cfg + " --out " + dir +
                  "/x > /dev/null 2>&1") == 3);
}

TEST_CASE("an output directory blocked by a file is an I/O failure") {
    const std::string dir = scratch("cli_blocked");
    const std::string cfg = dir + "/cfg.json";
    write_file(cfg, kThinConfig);
    write_file(dir + "/blocked", "in the way");
    CHECK(run_cmd(kTool + " run-thin --config " + cfg + " --out " + dir +
                  "/blocked > /dev/null 2>&1") == 4);
}
