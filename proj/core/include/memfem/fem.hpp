#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "memfem/linalg.hpp"
#include "memfem/mesh.hpp"

namespace memfem {

// Piecewise-constant coefficient per region kind. A slot left NaN means the
// map does not cover that kind; querying it raises CoefficientError.
struct CoefficientMap {
    double outer = std::numeric_limits<double>::quiet_NaN();
    double inclusion = std::numeric_limits<double>::quiet_NaN();
    double membrane = std::numeric_limits<double>::quiet_NaN();

    static CoefficientMap constant(double v) { return {v, v, v}; }
    double value(const RegionLabel& l) const;
};

using RegionPred = std::function<bool(const RegionLabel&)>;

inline bool keep_all(const RegionLabel&) { return true; }
inline RegionPred keep_kind(Region kind, int comp = 0) {
    return [kind, comp](const RegionLabel& l) {
        return l.kind == kind && (comp == 0 || l.component == comp);
    };
}
inline bool keep_conductors(const RegionLabel& l) { return l.kind != Region::Membrane; }

// Stiffness of u -> -div(coef grad u) over the triangles selected by `keep`.
// The matrix covers all mesh nodes; rows of untouched nodes are empty.
SparseSym assemble_stiffness(const Mesh& mesh, const CoefficientMap& coef,
                             const RegionPred& keep = keep_all);

// Node-lumped load/mass restricted to selected triangles: entry p collects
// area/3 of each kept triangle adjacent to p (times f(p) for the load).
// Non-finite nodal data raises InvalidField.
std::vector<double> lumped_load(const Mesh& mesh, const std::vector<double>& f_nodal,
                                const RegionPred& keep = keep_all);
std::vector<double> lumped_mass(const Mesh& mesh, const RegionPred& keep = keep_all);

// Sample a callable at every node; rejects non-finite samples (InvalidField).
std::vector<double> sample_nodes(const Mesh& mesh,
                                 const std::function<double(double, double)>& f);

// Symmetric elimination of fixed nodes: the reduced operator acts on free
// nodes only, boundary data enters through the right-hand side.
class DirichletSystem {
  public:
    DirichletSystem() = default;
    DirichletSystem(const SparseSym& a, const std::vector<unsigned char>& fixed_mask);

    // load: full-length load vector. fixed_values: full-length, read at fixed
    // nodes only. Returns the full-length solution.
    std::vector<double> solve(const std::vector<double>& load,
                              const std::vector<double>& fixed_values,
                              CgOptions opt = {}) const;

    const std::vector<int>& free_nodes() const { return free_; }
    bool is_free(int node) const { return node_to_free_[node] >= 0; }
    const SparseSym& full_operator() const { return a_full_; }

    // 2-norm of (A u - load) over free nodes, plus the reduced right-hand-side
    // norm the solver saw (with u's own fixed values as boundary data); the
    // pair supports relative staleness checks on flux inputs.
    struct ResidualReport {
        double residual = 0.0;
        double scale = 0.0;
    };
    ResidualReport residual_report(const std::vector<double>& u,
                                   const std::vector<double>& load) const;

  private:
    SparseSym a_full_;
    SparseSym a_reduced_;
    std::vector<int> free_;
    std::vector<int> node_to_free_;
};

std::vector<unsigned char> fix_boundary(const Mesh& mesh);
std::vector<unsigned char> fix_boundary_and_loops(const Mesh& mesh);

struct FieldNorms {
    double l2 = 0.0;       // node-lumped
    double h1_semi = 0.0;  // exact for piecewise-linear fields
};
FieldNorms field_norms(const Mesh& mesh, const std::vector<double>& u,
                       const RegionPred& keep = keep_all);

struct Grad {
    double gx = 0.0;
    double gy = 0.0;
};
Grad tri_gradient(const Mesh& mesh, int t, const std::vector<double>& u);

}  // namespace memfem
