#include "nltl2p/block_matching.hpp"
#include "nltl2p/lowrank.hpp"
#include "nltl2p/noise.hpp"
#include "nltl2p/prox.hpp"
#include "nltl2p/solver.hpp"

#include <benchmark/benchmark.h>

using namespace nltl2p;

namespace {

Tensor3 random_cube(const Dims3& dims, std::uint64_t seed) {
    Rng rng(seed);
    Tensor3 t(dims);
    for (double& v : t.data()) v = rng.uniform();
    return t;
}

void BM_ScalarSolve(benchmark::State& state) {
    const double p = static_cast<double>(state.range(0)) / 10.0;
    const double nu = 0.5 * scalar_nu0(p);
    for (auto _ : state) benchmark::DoNotOptimize(solve_scalar_t(nu, p));
}
BENCHMARK(BM_ScalarSolve)->Arg(1)->Arg(5)->Arg(9);

void BM_ProxL2p(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor3 t = random_cube({n, n, 31}, 1);
    for (auto _ : state) benchmark::DoNotOptimize(prox_l2p(t, 0.05, 0.5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.size()));
}
BENCHMARK(BM_ProxL2p)->Arg(64)->Arg(128);

void BM_BuildPlan(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Tensor3 t = random_cube({n, n, 31}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(build_plan(t, {5, 5, 20, 32, 1}));
}
BENCHMARK(BM_BuildPlan)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ExtractAdjoint(benchmark::State& state) {
    const Tensor3 t = random_cube({64, 64, 31}, 3);
    const auto plan = build_plan(t, {5, 5, 20, 32, 1});
    for (auto _ : state) benchmark::DoNotOptimize(transpose_apply(plan, extract(plan, t)));
}
BENCHMARK(BM_ExtractAdjoint)->Unit(benchmark::kMillisecond);

void BM_ProjectStiefel(benchmark::State& state) {
    Rng rng(4);
    Matrix a(25, 6);
    for (double& v : a.reshaped()) v = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(project_stiefel(a));
}
BENCHMARK(BM_ProjectStiefel);

void BM_Hosvd(benchmark::State& state) {
    const Tensor3 t = random_cube({64, 64, 31}, 5);
    const auto plan = build_plan(t, {5, 5, 20, 32, 1});
    const Tensor4 y = extract(plan, t);
    for (auto _ : state) benchmark::DoNotOptimize(init_hosvd(y, {6, 4, 3}));
}
BENCHMARK(BM_Hosvd)->Unit(benchmark::kMillisecond);

void BM_OuterIteration(benchmark::State& state) {
    const Tensor3 t = random_cube({32, 32, 16}, 6);
    SolverConfig c;
    c.delta = 0.5;
    c.gamma = 0.5;
    c.p = 0.7;
    c.weight = 0.05;
    c.ranks = {6, 2, 1};
    c.block_matching = {4, 4, 12, 8, 1};
    c.max_outer_iters = 1;
    c.bm_refresh_iters = 1;
    c.rel_tol = 1e-15;
    c.track_residuals = false;
    const SolverState start = initialize(t, c);
    for (auto _ : state) benchmark::DoNotOptimize(run(t, c, start));
}
BENCHMARK(BM_OuterIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
