#pragma once

#include <functional>
#include <vector>

#include "memfem/fem.hpp"
#include "memfem/surface.hpp"

namespace memfem {

// Weak interface flux: the transmission residual paired with surface hats.
struct FluxFunctional {
    TraceField nodal;            // per component, per loop node
    std::vector<double> total;   // per component: pairing with the indicator
};

// Small dense flux-constants system: a_ij = one-sided outer flux through loop
// i of the exterior harmonic field carrying unit data on loop j. Strictly
// negative diagonal, nonnegative off-diagonal, negative column sums.
struct ConstantsSystem {
    int m = 0;
    std::vector<double> a;  // row-major m x m

    double entry(int i, int j) const { return a[static_cast<std::size_t>(i) * m + j]; }
    std::vector<double> solve(const std::vector<double>& g) const;
};

struct Projection {
    TraceField trace;
    std::vector<double> constants;  // per component shift applied
};

struct CouplingTols {
    double cg_tol = 1e-10;       // bulk transmission solves
    double cg_tol_tight = 1e-13; // exterior/constants path; keeps the projection
                                 // identities well inside the 1e-10 contract
    double compat_tol = 1e-8;
    int cg_max_iter = 20000;
};

// All operators a thin-interface run needs, assembled once per mesh:
// sigma-weighted bulk stiffness, outer-region stiffness, unit stiffness for
// energies, Dirichlet reductions, surface operator, constants system.
class ThinOperators {
  public:
    ThinOperators(const Mesh& mesh, double sigma_int, double sigma_out,
                  CouplingTols tols = {});

    const Mesh& mesh() const { return *mesh_; }
    const SurfaceOperator& surface() const { return surface_; }
    const ConstantsSystem& constants() const { return constants_; }
    const CouplingTols& tols() const { return tols_; }
    const SparseSym& unit_stiffness() const { return a_unit_; }
    double sigma_out() const { return sigma_out_; }
    int components() const { return mesh_->components(); }

    // ---- elliptic solves ------------------------------------------------

    // -div(sigma grad u) = f per subdomain, u = h on loops, u = 0 on the
    // outer boundary.
    std::vector<double> solve_transmission(const std::vector<double>& f_nodal,
                                           const TraceField& h) const;
    std::vector<double> solve_zero_trace(const std::vector<double>& f_nodal) const;

    // Harmonic in the outer region with data g on loops, 0 on the outer
    // boundary; inclusion interiors pinned to 0 and excluded.
    std::vector<double> solve_exterior(const TraceField& g) const;

    // ---- traces ----------------------------------------------------------

    TraceField trace_of(const std::vector<double>& u) const;
    std::vector<double> scatter_trace(const TraceField& h) const;

    // ---- residual-based flux functionals ----------------------------------

    // Nodal jump flux at loop node p: (integral f phi_p) - (sigma-energy
    // pairing of u with phi_p); totals pair against component indicators.
    // StaleField when u does not solve the transmission system for f.
    FluxFunctional jump_flux(const std::vector<double>& u,
                             const std::vector<double>& f_nodal) const;

    // One-sided outer flux through loop `comp` (1-based), outward normal
    // pointing into the outer region.
    double onesided_outer_flux(const std::vector<double>& u,
                               const std::vector<double>& f_nodal, int comp) const;

    // Total flux through the outer boundary (outward normal).
    double boundary_flux(const std::vector<double>& ubar,
                         const std::vector<double>& f_nodal) const;

    // Per-component flux targets from the zero-trace field.
    std::vector<double> compute_targets(const std::vector<double>& ubar,
                                        const std::vector<double>& f_nodal) const;

    // Shift w by per-component constants so its exterior extension carries
    // exactly the target one-sided fluxes.
    Projection project(const TraceField& w, const std::vector<double>& targets) const;

    // Measured Lipschitz constant of w -> projection constants, from a fixed
    // set of smooth trace probes; cached per instance.
    double lipschitz_constant() const;

    // ---- energies / integrals ---------------------------------------------

    double bulk_grad_energy(const std::vector<double>& u) const;  // int |grad u|^2
    double lumped_integral(const std::vector<double>& f_nodal) const;
    double lumped_l2sq(const std::vector<double>& f_nodal) const;  // int f^2

  private:
    const Mesh* mesh_;
    double sigma_int_, sigma_out_;
    CouplingTols tols_;

    SparseSym a_sigma_, a_outer_, a_unit_;
    DirichletSystem transmission_, exterior_;
    SurfaceOperator surface_;
    ConstantsSystem constants_;

    std::vector<double> mass_all_, mass_outer_;
    std::vector<std::vector<double>> mass_incl_;  // per component

    mutable double lipschitz_ = -1.0;

    CgOptions cg(bool tight) const {
        return {tight ? tols_.cg_tol_tight : tols_.cg_tol, tols_.cg_max_iter};
    }
    double onesided_from_load(const std::vector<double>& u,
                              const std::vector<double>& outer_load, int comp) const;
    void check_solved_transmission(const std::vector<double>& u,
                                   const std::vector<double>& load) const;
    void check_solved_outer(const std::vector<double>& u,
                            const std::vector<double>& outer_load) const;
};

// Trace sampled from a callable at loop node coordinates.
TraceField sample_trace(const Mesh& mesh, const std::function<double(double, double)>& f);

}  // namespace memfem
