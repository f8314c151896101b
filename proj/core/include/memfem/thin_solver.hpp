#pragma once

#include <functional>
#include <string>
#include <vector>

#include "memfem/contraction.hpp"
#include "memfem/coupling.hpp"
#include "memfem/surface.hpp"

namespace memfem {

// Samples the volumetric source at every mesh node for a given time.
using TimeSampler = std::function<std::vector<double>(double t)>;

enum class ThinScheme { Marching, Picard };

struct ThinConfig {
    ThinScheme scheme = ThinScheme::Marching;
    double alpha = 1.0;
    double dt = 0.01;
    double t_end = 0.1;
    // Picard controls. `window` must be a positive multiple of dt.
    double window = 0.05;
    double picard_tol = 1e-10;
    int max_sweeps = 200;
    std::vector<int> dump_levels;  // time levels whose bulk field is retained
};

// Per time-level scalars recorded along a run (one entry per component where
// the quantity is component-valued).
struct ThinLevel {
    double t = 0.0;
    std::vector<double> ell;          // flux targets
    std::vector<double> c;            // projection constants producing h(t)
    std::vector<double> jump_total;   // per-component total jump flux of u(t)
    double bulk_energy = 0.0;         // int_Omega |grad u(t)|^2
    double surface_grad_energy = 0.0; // sum_i int_Gamma_i |grad_B h(t)|^2
    double f_l2sq = 0.0;              // int_Omega f(t)^2 (lumped)
};

struct ThinResult {
    std::vector<double> times;
    std::vector<ThinLevel> levels;
    std::vector<TraceField> h;                 // trace history h(t_k)
    TraceField u0_samples;                     // raw initial interface data
    std::vector<WindowReport> windows;         // Picard only
    int total_halvings = 0;
    std::vector<std::pair<int, std::vector<double>>> dumps;  // (level, bulk field)
    std::vector<double> final_field;           // bulk field at t_end
};

ThinResult run_thin(const ThinOperators& ops, const ThinConfig& cfg,
                    const TimeSampler& f, const TraceField& u0_samples);

// Discrete energy ledger for a completed run:
//   lhs = dt * sum_k bulk_energy(t_k) + max_k surface_grad_energy(t_k)
//   rhs = ||f||_{L2(0,T;L2)} + ||u0||_{H1(Gamma)}
// ratio = lhs / rhs^2, or 0 when the data vanishes.
struct EnergyAudit {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

EnergyAudit thin_energy_audit(const ThinOperators& ops, const ThinResult& result);

// Initial-rearrangement diagnostics: the projection constants c_i(t_0) and the
// exact identity ||h(t_0) - u0||_{L2(Gamma_i)} = |c_i(t_0)| * sqrt(perimeter_i).
struct RearrangementReport {
    std::vector<double> c0;
    std::vector<double> l2_gap;
    std::vector<double> predicted_gap;
};

RearrangementReport thin_rearrangement_report(const ThinOperators& ops,
                                              const ThinResult& result);

}  // namespace memfem
