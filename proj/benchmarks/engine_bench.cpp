#include <benchmark/benchmark.h>

#include "onionnet/engine.hpp"

using namespace onionnet;

static void BM_ScheduleDispatch(benchmark::State& state) {
    const auto events = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        Engine engine(1);
        std::uint64_t dispatched = 0;
        engine.set_handler([&](const Event&) { ++dispatched; });
        for (std::uint64_t i = 0; i < events; ++i) {
            engine.schedule(engine.rng().uniform(0, 1000), EventKind::ContactAttempt);
        }
        engine.run_until(1000);
        benchmark::DoNotOptimize(dispatched);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(events));
}
BENCHMARK(BM_ScheduleDispatch)->Arg(1000)->Arg(100000);

static void BM_RngUniform(benchmark::State& state) {
    Rng rng(7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rng.uniform(0, 999));
    }
}
BENCHMARK(BM_RngUniform);
