// Serial reference loop vs the OpenMP ensemble on the same short experiment.
// On one core the two should match; the parallel one scales with cores.

#include <benchmark/benchmark.h>

#include "ndb/scenarios.hpp"

namespace {

ndb::ExperimentConfig small_ensemble(std::size_t n) {
    ndb::RunConfig c = ndb::scenario_config("fig3c");
    c.experiment.n = n;
    c.experiment.setup.duration = 2e-3;
    c.experiment.setup.tail_duration = 0.0;
    c.experiment.analyze_final_modes = false;
    return c.resolve();
}

void BM_ensemble_serial(benchmark::State& state) {
    const auto cfg = small_ensemble(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto r = ndb::run_experiment_serial(cfg);
        benchmark::DoNotOptimize(r.stats.digest);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ensemble_openmp(benchmark::State& state) {
    const auto cfg = small_ensemble(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto r = ndb::run_experiment(cfg);
        benchmark::DoNotOptimize(r.stats.digest);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_rhs(benchmark::State& state) {
    const auto cfg = small_ensemble(1);
    ndb::FeedbackSystem sys{ndb::RotorModel(cfg.setup.particle, cfg.setup.trap), ndb::FeedbackSignal::sum,
                            1e7 * cfg.setup.particle.radius * cfg.setup.particle.radius};
    ndb::EulerVector y{0.1, 1.4, 0.0, 3e4, -2e4, 3e5};
    for (auto _ : state) {
        auto d = sys(0.0, y);
        benchmark::DoNotOptimize(d);
        y[0] += 1e-12;
    }
}

}  // namespace

BENCHMARK(BM_ensemble_serial)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ensemble_openmp)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_rhs);

BENCHMARK_MAIN();
