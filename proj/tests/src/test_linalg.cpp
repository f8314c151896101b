#include <cmath>
#include <vector>

#include "doctest.h"
#include "memfem/linalg.hpp"

using namespace memfem;

TEST_CASE("triplet assembly merges duplicates and keeps zeros") {
    auto a = SparseSym::from_triplets(
        2, {{0, 0, 2.0}, {0, 1, 1.0}, {0, 1, -1.0}, {1, 0, 0.0}, {1, 1, 3.0}});
    CHECK(a.size() == 2);
    // the cancelled off-diagonal entry stays in the pattern
    CHECK(a.nonzeros() == 4);
    auto row0 = a.row(0);
    CHECK(row0.count == 2);

    auto y = a.multiply({1.0, 1.0});
    CHECK(y[0] == doctest::Approx(2.0));
    CHECK(y[1] == doctest::Approx(3.0));
    CHECK(a.quadratic({1.0, 2.0}) == doctest::Approx(2.0 + 12.0));

    auto d = a.diagonal();
    CHECK(d[0] == doctest::Approx(2.0));
    CHECK(d[1] == doctest::Approx(3.0));
}

TEST_CASE("plus_scaled requires matching patterns") {
    auto a = SparseSym::from_triplets(2, {{0, 0, 1.0}, {1, 1, 1.0}, {0, 1, 0.5}, {1, 0, 0.5}});
    auto b = SparseSym::from_triplets(2, {{0, 0, 2.0}, {1, 1, 2.0}, {0, 1, 0.0}, {1, 0, 0.0}});
    auto c = a.plus_scaled(b, 0.5);
    CHECK(c.quadratic({1.0, 0.0}) == doctest::Approx(2.0));

    auto diag_only = SparseSym::from_triplets(2, {{0, 0, 1.0}, {1, 1, 1.0}});
    CHECK_THROWS_AS(a.plus_scaled(diag_only, 1.0), NumericError);
}

TEST_CASE("conjugate gradients solves a small SPD system") {
    auto a = SparseSym::from_triplets(
        2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}});
    std::vector<double> x;
    auto rep = cg_solve(a, {1.0, 2.0}, x, {1e-12, 100});
    CHECK(x[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-10));
    CHECK(x[1] == doctest::Approx(7.0 / 11.0).epsilon(1e-10));
    CHECK(rep.iterations <= 3);
    CHECK(rep.converged);
    CHECK(rep.final_residual <= 1e-12);
}

TEST_CASE("zero right-hand side returns zero immediately") {
    auto a = SparseSym::from_triplets(2, {{0, 0, 1.0}, {1, 1, 1.0}});
    std::vector<double> x;
    auto rep = cg_solve(a, {0.0, 0.0}, x);
    CHECK(x[0] == 0.0);
    CHECK(x[1] == 0.0);
    CHECK(rep.iterations == 0);
}

TEST_CASE("solver failure modes") {
    auto a = SparseSym::from_triplets(
        2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}});
    std::vector<double> x;
    CHECK_THROWS_AS(cg_solve(a, {1.0, 2.0}, x, {1e-16, 1}), SolverDiverged);

    auto bad_diag = SparseSym::from_triplets(2, {{0, 0, 0.0}, {1, 1, 1.0}});
    CHECK_THROWS_AS(cg_solve(bad_diag, {1.0, 1.0}, x), PreconditionerError);
}

TEST_CASE("zero-mean solve on a periodic chain") {
    // periodic second differences over 4 nodes, uniform segment length L
    const double L = 0.25;
    std::vector<Triplet> trips;
    for (int j = 0; j < 4; ++j) {
        int jn = (j + 1) % 4;
        trips.push_back({j, j, 2.0 / L});
        trips.push_back({j, jn, -1.0 / L});
        trips.push_back({jn, j, -1.0 / L});
    }
    auto a = SparseSym::from_triplets(4, trips);
    std::vector<double> weights(4, L);

    // alternating mass-weighted source: solution (c, -c, c, -c), zero mean
    const double m = 0.25;
    std::vector<double> b{m * L, -m * L, m * L, -m * L};
    std::vector<double> x;
    cg_solve_zero_mean(a, b, weights, x, 1e-8, {1e-13, 100});
    const double expect = m * L * L / 4.0;
    CHECK(x[0] == doctest::Approx(expect).epsilon(1e-10));
    CHECK(x[1] == doctest::Approx(-expect).epsilon(1e-10));
    double mean = 0.0;
    for (int j = 0; j < 4; ++j) mean += weights[j] * x[j];
    CHECK(std::abs(mean) <= 1e-14);

    std::vector<double> incompatible{1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(cg_solve_zero_mean(a, incompatible, weights, x), IncompatibleSource);
}

TEST_CASE("dense solve with partial pivoting") {
    auto c = dense_solve({-2.0, 1.0, 1.0, -2.0}, 2, {1.0, 0.0});
    CHECK(c[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));

    // pivoting handles a zero leading entry
    auto p = dense_solve({0.0, 1.0, 1.0, 0.0}, 2, {2.0, 3.0});
    CHECK(p[0] == doctest::Approx(3.0));
    CHECK(p[1] == doctest::Approx(2.0));

    CHECK_THROWS_AS(dense_solve({1.0, 1.0, 1.0, 1.0}, 2, {1.0, 0.0}),
                    SingularConstantsMatrix);
    CHECK_THROWS_AS(dense_solve({0.0, 0.0, 0.0, 0.0}, 2, {0.0, 0.0}),
                    SingularConstantsMatrix);
}
