#include <benchmark/benchmark.h>

#include "survbv/cox.hpp"
#include "survbv/cox_path.hpp"
#include "survbv/data_io.hpp"
#include "survbv/harness.hpp"

using namespace survbv;

namespace {

SurvivalDataset dataset(std::size_t n, std::size_t p) {
    SyntheticSpec spec;
    spec.n = n;
    spec.true_beta = Vector::Zero(static_cast<Eigen::Index>(p));
    spec.true_beta[0] = 1.0;
    if (p > 1) spec.true_beta[1] = -0.8;
    spec.censoring_rate_target = 0.3;
    spec.seed = 1;
    return generate_synthetic(spec).data;
}

void BM_ConcordanceIndex(benchmark::State& state) {
    const auto d = dataset(static_cast<std::size_t>(state.range(0)), 2);
    const Vector scores = d.covariates().col(0);
    for (auto _ : state) benchmark::DoNotOptimize(concordance_index(scores, d));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConcordanceIndex)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oNLogN);

void BM_PartialLikelihoodDerivatives(benchmark::State& state) {
    const auto d = dataset(static_cast<std::size_t>(state.range(0)), 17);
    const PartialLikelihood likelihood(d);
    const Vector beta = Vector::Constant(17, 0.05);
    for (auto _ : state) benchmark::DoNotOptimize(likelihood.evaluate(beta, true));
}
BENCHMARK(BM_PartialLikelihoodDerivatives)->Arg(100)->Arg(276)->Arg(2000);

void BM_FitCox(benchmark::State& state) {
    const auto d = dataset(static_cast<std::size_t>(state.range(0)), 17);
    for (auto _ : state) benchmark::DoNotOptimize(fit_cox(d));
}
BENCHMARK(BM_FitCox)->Arg(40)->Arg(220)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitPath(benchmark::State& state) {
    const auto d = dataset(static_cast<std::size_t>(state.range(0)), 17);
    PathConfig config;
    config.selection = state.range(1) ? Selection::cv_deviance() : Selection::fixed(1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(fit_path(d, config));
}
BENCHMARK(BM_FitPath)->Args({40, 0})->Args({220, 0})->Args({40, 1})->Args({220, 1})->Unit(benchmark::kMillisecond);

void BM_ProtocolCell(benchmark::State& state) {
    const auto d = dataset(400, 5);
    ProtocolConfig config;
    config.training_sizes = {80};
    config.replicates_per_size = 20;
    config.repetitions = 1;
    config.algorithms = {Algorithm::cox_ph()};
    for (auto _ : state) benchmark::DoNotOptimize(run_protocol(d, config));
}
BENCHMARK(BM_ProtocolCell)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
