#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memfem/mesh.hpp"

namespace memfem {

// One experiment description, parsed from a flat JSON document. Parsing
// validates everything that can be checked without building a mesh; geometry
// violations surface later from the mesh module.
struct RunConfig {
    std::string problem = "thin";  // thin | thick | concentration | delta_study

    // mesh
    int n = 16;
    std::vector<Box> boxes;
    int thicken_k = 0;  // membrane half-width in cells; thick meshes only

    // physics
    double sigma_int = 1.0;
    double sigma_out = 1.0;
    double alpha = 1.0;
    double delta = 0.1;

    // time discretization
    double t_end = 0.1;
    double dt = 0.01;
    std::string scheme = "marching";  // thin: marching|picard; thick: implicit|explicit|picard
    double window = 0.0;              // picard window; 0 means the whole interval
    double picard_tol = 1e-10;
    int max_sweeps = 200;

    // solver tolerances
    double cg_tol = 1e-10;
    int cg_max_iter = 20000;
    double compat_tol = 1e-8;

    // data
    std::string f_expr = "0";
    std::string u0_expr = "0";

    // outputs / studies
    std::vector<double> dump_times;
    std::vector<double> sample_times;          // concentration comparison times
    std::vector<double> delta_list{0.1, 0.01, 0.001};
    std::vector<int> eta_cells{4, 2, 1};

    std::uint64_t seed = 12345;
    int threads = 1;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

}  // namespace memfem
