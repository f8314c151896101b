#pragma once

#include <functional>
#include <string>
#include <vector>

#include "memfem/contraction.hpp"
#include "memfem/coupling.hpp"
#include "memfem/fem.hpp"
#include "memfem/thin_solver.hpp"

namespace memfem {

enum class ThickScheme { Implicit, Explicit, Picard };

struct ThickConfig {
    ThickScheme scheme = ThickScheme::Implicit;
    double delta = 0.1;   // residual capacity on the conductors; >= 0, but
                          // explicit/picard require > 0
    double alpha = 1.0;   // membrane capacity
    bool concentration_scaling = false;  // use alpha/eta on the membrane
    double sigma_int = 1.0;
    double sigma_out = 1.0;
    double dt = 0.01;
    double t_end = 0.1;
    double window = 0.05;
    double picard_tol = 1e-10;
    int max_sweeps = 200;
    std::vector<int> dump_levels;
    CouplingTols tols;
};

struct ExtensionReport {
    std::vector<double> field;
    double norm_ratio = 0.0;  // H1(Omega) of the extension over H1(membrane)
};

struct FluxCondition {
    std::vector<double> flux;      // one-sided flux into each membrane band
    std::vector<double> target;    // source integral over core + membrane
    std::vector<double> residual;  // |flux - target|
    std::vector<double> scale;     // max(1, |flux|, |target|)
};

// Operators for one thick mesh and one coefficient set: conduction form K
// (sigma on conductors, zero on the membrane), capacity form B (membrane
// capacity on the membrane, delta on conductors), the implicit-step matrix
// B + dt*K, and the harmonic-extension system for the initial data.
class ThickOperators {
  public:
    ThickOperators(const Mesh& mesh, const ThickConfig& cfg);

    const Mesh& mesh() const { return *mesh_; }
    const ThickConfig& config() const { return cfg_; }
    double membrane_capacity() const { return b_membrane_; }
    bool explicit_available() const { return has_explicit_; }

    // Harmonic extension of membrane data: fixed on membrane nodes and zero
    // on the outer boundary, Laplace-solved on conductor nodes. u0_nodal is
    // read at membrane-region nodes only.
    ExtensionReport extend_initial(const std::vector<double>& u0_nodal) const;

    // One implicit Euler step: (A_B + dt A_K) u' = A_B u + dt F.
    std::vector<double> step_implicit(const std::vector<double>& u,
                                      const std::vector<double>& f_nodal) const;

    // Auxiliary velocity: A_B v = -A_K x + F, v = 0 on the boundary. Requires
    // a positive conductor capacity.
    std::vector<double> velocity(const std::vector<double>& x,
                                 const std::vector<double>& f_nodal) const;

    // Per-component conservation residual: one-sided outer flux into the
    // membrane band versus the source integral over core and membrane.
    FluxCondition flux_condition(const std::vector<double>& u,
                                 const std::vector<double>& f_nodal) const;

    double membrane_grad_energy(const std::vector<double>& u) const;
    double conductor_grad_energy(const std::vector<double>& u) const;
    double capacity_energy(const std::vector<double>& u) const;  // (1/2) u'A_B u
    double bulk_h1_norm(const std::vector<double>& u) const;
    double membrane_h1sq(const std::vector<double>& u) const;
    double lumped_l2sq(const std::vector<double>& f_nodal) const;

    // Ratio dt*max(sigma)/delta governing explicit stability; <= 0 when the
    // explicit scheme is unavailable.
    double stability_ratio() const;

  private:
    const Mesh* mesh_;
    ThickConfig cfg_;
    double b_membrane_ = 0.0;
    bool has_explicit_ = false;

    SparseSym a_k_, a_b_, a_impl_, a_outer_, a_grad_memb_, a_grad_cond_;
    DirichletSystem implicit_sys_, explicit_sys_, extension_sys_;
    std::vector<unsigned char> membrane_mask_;

    CgOptions cg() const { return {cfg_.tols.cg_tol, cfg_.tols.cg_max_iter}; }
};

struct ThickLevel {
    double t = 0.0;
    // Per-component flux balance, checked against the load of the step that
    // produced the state (level 0: the initial extension against f(0), so a
    // generic initial state reports a genuine imbalance there). Implicit steps
    // satisfy the balance up to an O(delta) term; it is exact at delta = 0.
    std::vector<double> flux_residual;
    std::vector<double> flux_scale;
    double membrane_grad_energy = 0.0;
    double conductor_grad_energy = 0.0;
    double capacity_energy = 0.0;
    double f_l2sq = 0.0;
};

struct ThickResult {
    std::vector<double> times;
    std::vector<ThickLevel> levels;
    std::vector<std::vector<double>> history;  // bulk field at every level
    double extension_ratio = 0.0;
    std::vector<WindowReport> windows;  // Picard only
    int total_halvings = 0;
    std::vector<std::string> warnings;
    std::vector<std::pair<int, std::vector<double>>> dumps;
};

// March or iterate the band problem from the harmonically extended initial
// data. The Picard scheme solves each window by fixed-point sweeps whose
// limit is the implicit trajectory; windows halve on stalled contraction and
// underflow below dt raises ContractionFailure.
ThickResult run_thick(const ThickOperators& ops, const TimeSampler& f,
                      const std::vector<double>& u0_nodal);

// Discrete energy ledger whose bound is uniform in delta:
//   lhs = sup_k int_membrane |grad u|^2 + dt sum_k int_conductors |grad u|^2
//   rhs = ||f||^2_{L2(0,T;L2)} + ||u0||^2_{H1(membrane)}
struct ThickEnergyAudit {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

ThickEnergyAudit thick_energy_audit(const ThickOperators& ops, const ThickResult& result);

struct DeltaStudyRow {
    double delta = 0.0;
    double distance_h1 = 0.0;  // ||u_delta - u_0||_{L2(0,T;H1)}
    double energy_lhs = 0.0;
    double energy_rhs = 0.0;
    double energy_ratio = 0.0;
};

// Implicit runs for each delta in a strictly decreasing positive list plus
// the delta=0 limit problem; distances are against the limit run.
std::vector<DeltaStudyRow> delta_study(const Mesh& mesh, const ThickConfig& base,
                                       const std::vector<double>& deltas,
                                       const TimeSampler& f,
                                       const std::vector<double>& u0_nodal,
                                       int threads = 1);

struct ConcentrationRow {
    double eta = 0.0;
    double t = 0.0;
    double trace_gap = 0.0;  // L2(Gamma) distance, mid-membrane trace vs thin run
};

struct ConcentrationResult {
    std::vector<ConcentrationRow> rows;
    std::vector<double> etas;       // one per thickness, in input order
    std::vector<double> summary;    // max gap over the sample times, per thickness
};

// For each k in k_list: thicken the thin mesh (eta = 2k/n), run the implicit
// scheme with membrane capacity alpha/eta and delta = 0, and compare the
// mid-membrane trace against the thin run at the sample times. The volumetric
// sampler is shared: thickening relabels triangles but keeps the node set.
ConcentrationResult concentration_run(const Mesh& thin_mesh, const ThickConfig& base,
                                      const std::vector<int>& k_list,
                                      const TimeSampler& f,
                                      const std::function<double(double, double)>& u0_fn,
                                      const std::vector<double>& sample_times,
                                      int threads = 1);

}  // namespace memfem
