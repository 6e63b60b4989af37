#include <benchmark/benchmark.h>

#include "mbjm/engine.hpp"
#include "mbjm/simulate.hpp"

namespace {

using namespace mbjm;

void BM_FitMbjmEx(benchmark::State& state) {
    const int n = (int)state.range(0);
    const SimScenario sc = SimScenario::default_mbjm_ex(n, 42);
    const SimData data = generate_data(sc);
    const ModelConfig config = sc.model_config();
    for (auto _ : state) {
        const FittedMbjm fit = fit_mbjm(data.training, config);
        benchmark::DoNotOptimize(fit.survival.shape);
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_FitMbjmEx)->Arg(200)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_FitMbjmTp(benchmark::State& state) {
    const int n = (int)state.range(0);
    const SimScenario sc = SimScenario::default_mbjm_tp(n, 42);
    const SimData data = generate_data(sc);
    const ModelConfig config = sc.model_config();
    for (auto _ : state) {
        const FittedMbjm fit = fit_mbjm(data.training, config);
        benchmark::DoNotOptimize(fit.survival.shape);
    }
}
BENCHMARK(BM_FitMbjmTp)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_DynamicRisk(benchmark::State& state) {
    const SimScenario sc = SimScenario::default_mbjm_ex(300, 42);
    const SimData data = generate_data(sc);
    const FittedMbjm model = fit_mbjm(data.training, sc.model_config());
    const SubjectRecord& subject = data.validation.subjects.front();
    const RiskQuery query = make_query(model, subject, 1.0, 3.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dynamic_risk(model, query).risk);
    }
}
BENCHMARK(BM_DynamicRisk)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
