#include <bbm/estimators.hpp>
#include <bbm/observables.hpp>
#include <bbm/population.hpp>

#include <benchmark/benchmark.h>

#include <vector>

namespace {

// Raw event loop: population grows like e^t, so horizon sets the size.
void BM_AdvanceTo(benchmark::State& state) {
    const double horizon = static_cast<double>(state.range(0));
    std::uint64_t seed = 1;
    std::size_t particles = 0;
    for (auto _ : state) {
        bbm::SimConfig cfg;
        cfg.seed = seed++;
        cfg.horizon = horizon;
        bbm::Population pop(cfg);
        pop.advance_to(horizon);
        particles += pop.size();
        benchmark::DoNotOptimize(pop.size());
    }
    state.counters["particles"] = benchmark::Counter(static_cast<double>(particles), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_AdvanceTo)->Arg(6)->Arg(9)->Arg(12)->Unit(benchmark::kMillisecond);

// Front tracking with pruning, the setting used for T(y).
void BM_FrontExceedance(benchmark::State& state) {
    const double dt = 1.0 / static_cast<double>(state.range(0));
    const std::vector<double> ys{0.5, 1.0, 1.5};
    std::uint64_t seed = 1;
    for (auto _ : state) {
        bbm::SimConfig cfg;
        cfg.seed = seed++;
        cfg.horizon = 20.0;
        cfg.dt = dt;
        cfg.prune_gap = 4.0;
        bbm::Population pop(cfg);
        benchmark::DoNotOptimize(bbm::track_front_exceedance(pop, ys));
    }
}
BENCHMARK(BM_FrontExceedance)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PairSum(benchmark::State& state) {
    bbm::SimConfig cfg;
    cfg.seed = 3;
    cfg.horizon = static_cast<double>(state.range(0));
    bbm::Population pop(cfg);
    pop.advance_to(cfg.horizon);
    for (auto _ : state) benchmark::DoNotOptimize(bbm::pair_sum(pop, -1.0, 1.0));
    state.counters["particles"] = static_cast<double>(pop.size());
}
BENCHMARK(BM_PairSum)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
