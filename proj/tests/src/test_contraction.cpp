#include <cmath>
#include <vector>

#include "doctest.h"
#include "memfem/contraction.hpp"

using namespace memfem;

TEST_CASE("log-linear fit of a geometric sequence") {
    std::vector<double> res;
    double v = 1.0;
    for (int s = 0; s < 8; ++s) {
        res.push_back(v);
        v *= 0.5;
    }
    auto fit = fit_log_decay(res);
    CHECK(fit.points == 8);
    CHECK(fit.slope == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit ignores the converged tail") {
    std::vector<double> res{1.0, 0.1, 0.01, 1e-14, 3e-15};
    auto fit = fit_log_decay(res, 1e-13);
    CHECK(fit.points == 3);
    CHECK(fit.slope == doctest::Approx(std::log(0.1)).epsilon(1e-9));
}

TEST_CASE("degenerate fits report zero") {
    CHECK(fit_log_decay({}).points == 0);
    CHECK(fit_log_decay({0.5}).points == 1);
    CHECK(fit_log_decay({0.5}).slope == 0.0);
    CHECK(fit_log_decay({1e-15, 1e-16}).points == 0);
}

TEST_CASE("noisy decay keeps a high but imperfect correlation") {
    std::vector<double> res;
    double v = 1.0;
    for (int s = 0; s < 10; ++s) {
        res.push_back(v * (s % 2 == 0 ? 1.05 : 0.95));
        v *= 0.4;
    }
    auto fit = fit_log_decay(res);
    CHECK(fit.points == 10);
    CHECK(fit.r_squared > 0.99);
    CHECK(fit.r_squared < 1.0);
    CHECK(fit.slope < 0.0);
}
