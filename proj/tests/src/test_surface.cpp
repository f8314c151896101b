#include <cmath>
#include <vector>

#include "doctest.h"
#include "memfem/mesh.hpp"
#include "memfem/surface.hpp"

using namespace memfem;

namespace {
SurfaceOperator square_loop() {
    // free-standing unit-perimeter square, four segments of length 0.25
    SurfaceOperator op;
    op.comps.push_back(build_surface_component(
        {{0.0, 0.0}, {0.25, 0.0}, {0.25, 0.25}, {0.0, 0.25}}));
    return op;
}
}  // namespace

TEST_CASE("surface operator from a mesh loop") {
    Mesh mesh = build_square_mesh(4);
    embed_inclusions(mesh, {{0.25, 0.25, 0.75, 0.75}});
    auto op = build_surface_operator(mesh);
    REQUIRE(op.comps.size() == 1);
    const auto& comp = op.comps[0];
    CHECK(comp.size() == 8);
    CHECK(comp.perimeter == doctest::Approx(2.0).epsilon(1e-13));

    double mass_total = 0.0;
    for (double m : comp.mass) mass_total += m;
    CHECK(mass_total == doctest::Approx(comp.perimeter).epsilon(1e-13));

    // periodic second-difference row: 2/len once, -1/len twice
    auto row = comp.stiffness.row(3);
    REQUIRE(row.count == 3);
    double diag = 0.0, off = 0.0;
    for (int k = 0; k < row.count; ++k) {
        if (row.cols[k] == 3)
            diag = row.vals[k];
        else
            off += row.vals[k];
    }
    CHECK(diag == doctest::Approx(2.0 / 0.25).epsilon(1e-13));
    CHECK(off == doctest::Approx(-2.0 / 0.25).epsilon(1e-13));

    // constants are in the kernel
    std::vector<double> ones(comp.size(), 1.0);
    CHECK(comp.stiffness.quadratic(ones) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("two loops give two independent components") {
    Mesh mesh = build_square_mesh(8);
    embed_inclusions(mesh, {{0.125, 0.125, 0.375, 0.375}, {0.625, 0.625, 0.875, 0.875}});
    auto op = build_surface_operator(mesh);
    REQUIRE(op.comps.size() == 2);

    TraceField g = op.zero_trace();
    // compatible source supported on the first component only
    g.comp[0][0] = op.comps[0].mass[0];
    g.comp[0][4] = -op.comps[0].mass[4];
    auto v = lb_solve(op, 1.0, g, 1e-8, {1e-12, 2000});
    double second = 0.0;
    for (double x : v.comp[1]) second = std::max(second, std::abs(x));
    CHECK(second == 0.0);
    double first = 0.0;
    for (double x : v.comp[0]) first = std::max(first, std::abs(x));
    CHECK(first > 0.0);
}

TEST_CASE("alternating source on the square loop") {
    auto op = square_loop();
    TraceField g = op.zero_trace();
    for (int j = 0; j < 4; ++j) g.comp[0][j] = 0.25 * ((j % 2 == 0) ? 0.25 : -0.25);
    auto v = lb_solve(op, 1.0, g, 1e-8, {1e-13, 500});
    const double expect = 0.25 * 0.25 * 0.25 / 4.0;
    for (int j = 0; j < 4; ++j)
        CHECK(v.comp[0][j] == doctest::Approx((j % 2 == 0) ? expect : -expect)
                                  .epsilon(1e-9));
}

TEST_CASE("doubling the surface capacity halves the response exactly") {
    Mesh mesh = build_square_mesh(8);
    embed_inclusions(mesh, {{0.25, 0.25, 0.75, 0.75}});
    auto op = build_surface_operator(mesh);
    const auto& comp = op.comps[0];
    TraceField g = op.zero_trace();
    for (int j = 0; j < comp.size(); ++j)
        g.comp[0][j] =
            comp.mass[j] * std::sin(2.0 * M_PI * comp.arc[j] / comp.perimeter);
    auto v1 = lb_solve(op, 1.0, g);
    auto v2 = lb_solve(op, 2.0, g);
    for (int j = 0; j < comp.size(); ++j) CHECK(v2.comp[0][j] == 0.5 * v1.comp[0][j]);
}

TEST_CASE("incompatible surface source is rejected per component") {
    auto op = square_loop();
    TraceField g = op.zero_trace();
    for (auto& x : g.comp[0]) x = 0.3;
    CHECK_THROWS_AS(lb_solve(op, 1.0, g), IncompatibleSource);
}

TEST_CASE("surface norms and gradients") {
    auto op = square_loop();
    const auto& comp = op.comps[0];

    TraceField c = op.zero_trace();
    for (auto& x : c.comp[0]) x = 2.0;
    CHECK(surface_l2_norm(op, c) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(surface_grad_energy(op, c) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(surface_h1_norm(op, c) == doctest::Approx(2.0).epsilon(1e-13));

    // hat on one node: gradients live on the two adjacent segments
    TraceField hat = op.zero_trace();
    hat.comp[0][1] = 1.0;
    auto grads = surface_gradient(op, hat);
    REQUIRE(grads.size() == 1);
    REQUIRE(grads[0].size() == 4);
    CHECK(grads[0][0] == doctest::Approx(1.0 / comp.seg_len[0]));
    CHECK(grads[0][1] == doctest::Approx(-1.0 / comp.seg_len[1]));
    CHECK(grads[0][2] == doctest::Approx(0.0));
    CHECK(grads[0][3] == doctest::Approx(0.0));

    double energy = surface_grad_energy(op, hat);
    double manual = 0.0;
    for (int j = 0; j < 4; ++j) manual += grads[0][j] * grads[0][j] * comp.seg_len[j];
    CHECK(energy == doctest::Approx(manual).epsilon(1e-13));
}

TEST_CASE("integration by parts on the discrete surface") {
    Mesh mesh = build_square_mesh(8);
    embed_inclusions(mesh, {{0.25, 0.25, 0.75, 0.75}});
    auto op = build_surface_operator(mesh);
    const auto& comp = op.comps[0];
    std::vector<double> x(comp.size()), y(comp.size());
    for (int j = 0; j < comp.size(); ++j) {
        x[j] = std::sin(2.0 * M_PI * comp.arc[j] / comp.perimeter);
        y[j] = comp.arc[j] * (comp.perimeter - comp.arc[j]);
    }
    double lhs = dot(x, comp.stiffness.multiply(y));
    double rhs = 0.0;
    for (int j = 0; j < comp.size(); ++j) {
        int jn = (j + 1) % comp.size();
        rhs += (x[jn] - x[j]) * (y[jn] - y[j]) / comp.seg_len[j];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("trace field arithmetic") {
    auto op = square_loop();
    TraceField a = op.zero_trace();
    for (int j = 0; j < 4; ++j) a.comp[0][j] = j;
    TraceField b = TraceField::zeros_like(a);
    b.add_scaled(a, 2.0);
    b.add_component_constant(0, 1.0);
    auto d = b - a;
    for (int j = 0; j < 4; ++j) CHECK(d.comp[0][j] == doctest::Approx(j + 1.0));
}
