#include "invmeas/density.hpp"
#include "invmeas/examples.hpp"
#include "invmeas/fem.hpp"
#include "invmeas/mesh.hpp"
#include "invmeas/sde.hpp"
#include "invmeas/test_function.hpp"
#include "invmeas/verify.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace invmeas;

namespace {

double mesh_h(const benchmark::State& state) { return 1.0 / static_cast<double>(state.range(0)); }

void BM_MeshDisk(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(mesh_disk(2.0, mesh_h(state)));
}
BENCHMARK(BM_MeshDisk)->Arg(10)->Arg(20)->Arg(40);

void BM_AssembleOu(benchmark::State& state) {
    const auto cs = example("ou");
    const auto mesh = std::make_shared<const TriMesh>(mesh_disk(2.0, mesh_h(state)));
    for (auto _ : state) benchmark::DoNotOptimize(assemble_ball_form(cs, mesh, 0.0));
    state.counters["vertices"] = mesh->num_vertices();
}
BENCHMARK(BM_AssembleOu)->Arg(10)->Arg(20)->Arg(40);

void BM_SolveOu(benchmark::State& state) {
    const auto mesh = std::make_shared<const TriMesh>(mesh_disk(3.0, mesh_h(state)));
    const auto sys = assemble_ball_form(example("ou"), mesh, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve(sys));
    state.counters["vertices"] = mesh->num_vertices();
}
BENCHMARK(BM_SolveOu)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_BuildDensityInfsin(benchmark::State& state) {
    const auto cs = example("infsin");
    for (auto _ : state) benchmark::DoNotOptimize(build_density(cs, {2, 3}, 0.05, 1.0, 1e-2));
}
BENCHMARK(BM_BuildDensityInfsin)->Unit(benchmark::kMillisecond);

void BM_InvarianceResidual(benchmark::State& state) {
    const auto cs = example("ou");
    const TriMesh mesh = mesh_disk(1.0, 0.05);
    const TestFunction phi(Vec2(0.1, -0.2), 0.2);
    for (auto _ : state) benchmark::DoNotOptimize(invariance_residual(cs, *cs.reference_density, phi, mesh));
}
BENCHMARK(BM_InvarianceResidual)->Unit(benchmark::kMillisecond);

void BM_SimulateSteps(benchmark::State& state, const char* name) {
    SdeProblem p(example(name));
    p.dt = 1e-3;
    p.taming = p.cs.has_singularities();
    p.workers = 1;
    const int paths = 100;
    for (auto _ : state) benchmark::DoNotOptimize(simulate(p, {Point::Zero(2)}, 1.0, paths, 1));
    state.SetItemsProcessed(state.iterations() * paths * 1000);
}
BENCHMARK_CAPTURE(BM_SimulateSteps, ou, "ou")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SimulateSteps, infsin, "infsin")->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
