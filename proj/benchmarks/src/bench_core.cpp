// Microbenchmarks for the hot paths: stiffness assembly, the preconditioned
// CG solve, the interface evolution step, and the surface solve.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "memfem/coupling.hpp"
#include "memfem/fem.hpp"
#include "memfem/linalg.hpp"
#include "memfem/mesh.hpp"
#include "memfem/surface.hpp"
#include "memfem/thin_solver.hpp"

namespace {

memfem::Mesh box_mesh(int n) {
    memfem::Mesh mesh = memfem::build_square_mesh(n);
    memfem::embed_inclusions(mesh, {{0.25, 0.25, 0.75, 0.75}});
    return mesh;
}

void bench_assembly(benchmark::State& state) {
    const memfem::Mesh mesh = box_mesh(static_cast<int>(state.range(0)));
    const memfem::CoefficientMap coef = memfem::CoefficientMap::constant(1.0);
    for (auto _ : state) {
        memfem::SparseSym a = memfem::assemble_stiffness(mesh, coef);
        benchmark::DoNotOptimize(a);
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(mesh.tris.size()));
}

void bench_cg_poisson(benchmark::State& state) {
    const memfem::Mesh mesh = box_mesh(static_cast<int>(state.range(0)));
    const memfem::SparseSym a =
        memfem::assemble_stiffness(mesh, memfem::CoefficientMap::constant(1.0));
    const auto f = memfem::sample_nodes(
        mesh, [](double x, double y) { return std::sin(3.0 * x) + y; });
    memfem::DirichletSystem sys(a, memfem::fix_boundary(mesh));
    const auto load = memfem::lumped_load(mesh, f);
    const std::vector<double> fixed(mesh.nodes.size(), 0.0);
    for (auto _ : state) {
        auto u = sys.solve(load, fixed);
        benchmark::DoNotOptimize(u);
    }
}

void bench_thin_step(benchmark::State& state) {
    const memfem::Mesh mesh = box_mesh(static_cast<int>(state.range(0)));
    const memfem::ThinOperators ops(mesh, 1.0, 1.0);
    const auto f = memfem::sample_nodes(mesh, [](double x, double) { return 1.0 + x; });
    memfem::ThinConfig cfg;
    cfg.t_end = 0.02;
    cfg.dt = 0.01;
    cfg.scheme = memfem::ThinScheme::Marching;
    const auto u0 = memfem::sample_trace(
        mesh, [](double x, double y) { return x * y; });
    for (auto _ : state) {
        auto res = memfem::run_thin(
            ops, cfg, [&f](double) { return f; }, u0);
        benchmark::DoNotOptimize(res);
    }
}

void bench_surface_solve(benchmark::State& state) {
    const memfem::Mesh mesh = box_mesh(static_cast<int>(state.range(0)));
    const memfem::SurfaceOperator op = memfem::build_surface_operator(mesh);
    memfem::TraceField g = op.zero_trace();
    const memfem::Loop& loop = mesh.loops[0];
    for (std::size_t k = 0; k < g.comp[0].size(); ++k)
        g.comp[0][k] = std::sin(2.0 * 3.14159265358979 * loop.arc[k] / loop.perimeter) *
                       loop.seg_len[k];
    for (auto _ : state) {
        auto h = memfem::lb_solve(op, 1.0, g);
        benchmark::DoNotOptimize(h);
    }
}

}  // namespace

BENCHMARK(bench_assembly)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_cg_poisson)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_thin_step)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_surface_solve)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
