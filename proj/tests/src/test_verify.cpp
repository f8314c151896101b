// The verification harness itself: the quick invariant suite must pass in a
// healthy build, its check names are pinned, and the conservation identity it
// relies on has teeth, i.e. it actually fails on a corrupted field.

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "memfem/checks.hpp"
#include "memfem/coupling.hpp"
#include "memfem/errors.hpp"
#include "memfem/fem.hpp"
#include "memfem/mesh.hpp"

using namespace memfem;

TEST_CASE("quick invariant suite passes on a healthy build") {
    const std::vector<CheckResult> report = run_invariant_checks(CheckLevel::Quick);

    const std::vector<std::string> expected = {
        "mesh-structure",        "linear-solver-oracles", "assembly-oracles",
        "surface-operator-oracles", "flux-conservation",  "transmission-bounds",
        "thin-linearity",        "thick-dissipativity",   "thick-flux-identity",
        "expression-and-config",
    };
    REQUIRE(report.size() == expected.size());
    for (std::size_t i = 0; i < report.size(); ++i) {
        CAPTURE(report[i].name);
        CAPTURE(report[i].detail);
        CHECK(report[i].name == expected[i]);
        CHECK(report[i].passed);
    }
}

TEST_CASE("the conservation identity detects a corrupted field") {
    Mesh mesh = build_square_mesh(8);
    embed_inclusions(mesh, {{0.25, 0.25, 0.75, 0.75}});
    ThinOperators ops(mesh, 1.0, 1.0);
    const auto f = sample_nodes(mesh, [](double x, double) { return 1.0 + x; });
    const std::vector<double> ubar = ops.solve_zero_trace(f);

    // Raw balance, computed from the assembled operator rather than through
    // the flux accessors (those refuse fields that do not solve the system).
    const SparseSym a_outer =
        assemble_stiffness(mesh, CoefficientMap::constant(1.0), keep_kind(Region::Outer));
    const std::vector<double> load = lumped_load(mesh, f, keep_kind(Region::Outer));

    auto balance_of = [&](const std::vector<double>& u, double& scale) {
        const std::vector<double> au = a_outer.multiply(u);
        double bf = 0.0;
        for (int p : mesh.boundary_nodes) bf += au[p] - load[p];
        double ones = 0.0;
        for (const Loop& loop : mesh.loops)
            for (int p : loop.nodes) ones += load[p] - au[p];
        double f_outer = 0.0;
        for (double v : load) f_outer += v;
        scale = std::max({1.0, std::abs(bf), std::abs(ones), std::abs(f_outer)});
        return bf - ones + f_outer;
    };

    double scale = 1.0;
    const double good = balance_of(ubar, scale);
    CHECK(std::abs(good) <= 1e-9 * scale);

    // Perturb one outer node adjacent to the domain boundary: the discrete
    // boundary flux moves, nothing else in the identity compensates.
    std::vector<double> corrupted = ubar;
    corrupted[1 * (mesh.n + 1) + 1] += 0.01;
    const double bad = balance_of(corrupted, scale);
    CHECK(std::abs(bad) > 1e-6 * scale);

    // The guarded accessor refuses the corrupted field outright.
    CHECK_THROWS_AS(ops.boundary_flux(corrupted, f), StaleField);
}
