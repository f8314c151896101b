#pragma once

#include <string>
#include <vector>

#include "memfem/config.hpp"
#include "memfem/expr.hpp"
#include "memfem/thick_solver.hpp"
#include "memfem/thin_solver.hpp"

namespace memfem {

struct RunArtifacts {
    std::string summary;             // one-line result digest
    std::vector<std::string> files;  // artifact paths, in write order
};

// Build the mesh a config describes: unit square, embedded boxes, and for the
// thick problems the membrane band.
Mesh build_mesh_from_config(const RunConfig& cfg);

ThinConfig thin_config_from(const RunConfig& cfg);
ThickConfig thick_config_from(const RunConfig& cfg);

// Nodal sampler binding an expression to a mesh; the expression sees (x, y, t).
TimeSampler make_sampler(const Mesh& mesh, const Expr& f);

// Map requested dump times to time levels.
std::vector<int> dump_levels_from(const RunConfig& cfg);

// Execute the configured pipeline and write its artifacts (CSV tables, field
// dumps, and a normalized config echo) under out_dir. All writes are atomic.
RunArtifacts run_pipeline(const RunConfig& cfg, const std::string& out_dir);

// Shared formatting: shortest exact decimal for doubles ("%.17g").
std::string format_value(double v);

}  // namespace memfem
