#pragma once

#include <vector>

namespace memfem {

// One fixed-point window's convergence record (accepted attempt only).
struct WindowReport {
    double t_start = 0.0;
    double t_end = 0.0;
    double window_used = 0.0;          // width after any halving
    int sweeps = 0;
    int halvings = 0;                  // halvings spent while attempting this window
    std::vector<double> residuals;     // per-sweep max increment norm
    std::vector<double> ratios;        // residuals[s] / residuals[s-1]
};

struct LogLinearFit {
    double slope = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

// Least-squares fit of log(residual) against sweep index, ignoring entries
// at or below `floor` (converged-to-roundoff tail).
LogLinearFit fit_log_decay(const std::vector<double>& residuals, double floor = 1e-13);

}  // namespace memfem
