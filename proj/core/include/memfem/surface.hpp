#pragma once

#include <vector>

#include "memfem/linalg.hpp"
#include "memfem/mesh.hpp"

namespace memfem {

// Values on interface nodes, one array per component in loop node order.
struct TraceField {
    std::vector<std::vector<double>> comp;

    static TraceField zeros_like(const TraceField& other);
    void add_scaled(const TraceField& other, double s);
    void add_component_constant(int c, double v);  // c is 0-based here
    TraceField operator-(const TraceField& other) const;
};

// Discrete tangential calculus on the closed interface polylines: periodic 1D
// P1 Laplace-Beltrami stiffness along arc length plus lumped segment masses.
struct SurfaceOperator {
    struct Component {
        SparseSym stiffness;          // row: (1/len) second differences
        std::vector<double> mass;     // (len_{j-1} + len_j)/2, sums to perimeter
        std::vector<double> seg_len;
        std::vector<double> arc;
        double perimeter = 0.0;
        int size() const { return static_cast<int>(mass.size()); }
    };
    std::vector<Component> comps;

    TraceField zero_trace() const;
};

// From the mesh's interface loops.
SurfaceOperator build_surface_operator(const Mesh& mesh);

// From a raw closed polyline (no repeated endpoint); used by spectral tests
// on polygons that are not grid-aligned.
SurfaceOperator::Component build_surface_component(const std::vector<Point>& polyline);

// Solve alpha * (L v) = g per component with zero weighted-mean, where the
// source g carries lumped mass (so compatibility is the plain per-component
// sum). IncompatibleSource when a component sum exceeds compat_tol * ||g||.
TraceField lb_solve(const SurfaceOperator& op, double alpha, const TraceField& g,
                    double compat_tol = 1e-8, CgOptions cg = {});

// ||w||^2 = sum_j mass_j w_j^2 + sum_j (w_{j+1}-w_j)^2 / len_j over components.
double surface_h1_norm(const SurfaceOperator& op, const TraceField& w);
double surface_l2_norm(const SurfaceOperator& op, const TraceField& w);
double surface_l2_norm_component(const SurfaceOperator& op, const TraceField& w, int c);
double surface_grad_energy(const SurfaceOperator& op, const TraceField& w);
double surface_grad_energy_component(const SurfaceOperator& op, const TraceField& w, int c);

// Per-segment first differences over lengths.
std::vector<std::vector<double>> surface_gradient(const SurfaceOperator& op,
                                                  const TraceField& w);

}  // namespace memfem
