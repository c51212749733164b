#include "fixtures.hpp"
#include "sovdebt/hamiltonian.hpp"
#include "sovdebt/montecarlo.hpp"
#include "sovdebt/solver.hpp"

#include <benchmark/benchmark.h>

using namespace sovdebt;

static void BM_EvalH(benchmark::State& state) {
    const Model m = testing::base_model();
    double x = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval_H(x, 2.0, 0.7, m.params, m.costs));
        x = x < 1.4 ? x + 1e-3 : 0.1;
    }
}
BENCHMARK(BM_EvalH);

static void BM_ContinuationSolve(benchmark::State& state) {
    const Model m = testing::base_model();
    SolverConfig cfg;
    cfg.n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(continuation_solve(m, cfg));
}
BENCHMARK(BM_ContinuationSolve)->Arg(201)->Arg(801)->Arg(3201)->Unit(benchmark::kMillisecond);

static void BM_SimulatePaths(benchmark::State& state) {
    const Model m = testing::base_model();
    const Solution s = continuation_solve(m, SolverConfig{}).solution;
    const Feedback fb = Feedback::from_solution(s, m.params.v_max);
    SimConfig sim;
    sim.n_paths = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(estimate(fb, m, sim));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatePaths)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
