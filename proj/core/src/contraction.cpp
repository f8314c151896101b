#include "memfem/contraction.hpp"

#include <cmath>

namespace memfem {

LogLinearFit fit_log_decay(const std::vector<double>& residuals, double floor) {
    LogLinearFit fit;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        if (residuals[i] > floor) {
            xs.push_back(static_cast<double>(i));
            ys.push_back(std::log(residuals[i]));
        }
    }
    fit.points = static_cast<int>(xs.size());
    if (fit.points < 2) return fit;

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= fit.points;
    my /= fit.points;

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;

    double ss_res = 0.0;
    for (int i = 0; i < fit.points; ++i) {
        const double pred = my + fit.slope * (xs[i] - mx);
        ss_res += (ys[i] - pred) * (ys[i] - pred);
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

}  // namespace memfem
