#include <benchmark/benchmark.h>

#include "mte/bootstrap.hpp"
#include "mte/population.hpp"
#include "worlds.hpp"

namespace {

void SimulatePopulation(benchmark::State& state) {
    mte::PopulationSpec spec = worlds::u_world(1, static_cast<int>(state.range(0)), 1000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mte::simulate_population(spec, 1));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}
BENCHMARK(SimulatePopulation)->Arg(10)->Arg(50);

void TrueMteOracle(benchmark::State& state) {
    mte::PopulationSpec spec = worlds::u_world(2, 50, static_cast<int>(state.range(0)));
    std::vector<double> grid;
    for (int k = 0; k <= 40; ++k) grid.push_back(0.25 + 0.41 * k / 40.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mte::true_mte_curve(spec, grid, 0.01, 1));
    }
}
BENCHMARK(TrueMteOracle)->Arg(1000)->Arg(4000);

void FullEstimation(benchmark::State& state) {
    mte::PopulationSpec spec = worlds::u_world(3, 50, static_cast<int>(state.range(0)));
    const mte::Dataset data = mte::simulate_population(spec, 1);
    mte::EstimatorSpec est;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mte::run_estimation(data, est));
    }
    state.SetItemsProcessed(state.iterations() * data.n());
}
BENCHMARK(FullEstimation)->Arg(400)->Arg(4000);

void BootstrapReplicates(benchmark::State& state) {
    mte::PopulationSpec spec = worlds::u_world(4, 50, 400);
    const mte::Dataset data = mte::simulate_population(spec, 1);
    mte::EstimatorSpec est;
    const mte::EstimationResult res = mte::run_estimation(data, est);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            mte::block_bootstrap(data, est, static_cast<int>(state.range(0)), 7, res.curve, 1));
    }
}
BENCHMARK(BootstrapReplicates)->Arg(20);

void SplineEvaluate(benchmark::State& state) {
    const mte::SplineBasis basis = mte::SplineBasis::equally_spaced(5, 0.25, 0.66);
    std::vector<double> v, d;
    double f = 0.30;
    for (auto _ : state) {
        basis.evaluate(f, v, d);
        benchmark::DoNotOptimize(v);
        f += 1e-6;
        if (f > 0.9) f = 0.05;
    }
}
BENCHMARK(SplineEvaluate);

}  // namespace

BENCHMARK_MAIN();
