// Serial reference vs OpenMP kernels, plus batched prediction at one thread
// vs the OpenMP default.

#include <benchmark/benchmark.h>

#include <vector>

#include "mvmae/config.hpp"
#include "mvmae/data/synthetic.hpp"
#include "mvmae/kernels.hpp"
#include "mvmae/rng.hpp"
#include "mvmae/train/trainer.hpp"

namespace {

using namespace mvmae;
using Kernel = void (*)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t, bool);

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

template <Kernel K>
void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        K(a.data(), b.data(), c.data(), n, n, n, false);
        benchmark::DoNotOptimize(c.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

#define GEMM_PAIR(name)                                                                            \
    BENCHMARK(BM_Gemm<kernels::serial::name>)->Name("serial/" #name)->RangeMultiplier(2)->Range(32, 256); \
    BENCHMARK(BM_Gemm<kernels::parallel::name>)->Name("openmp/" #name)->RangeMultiplier(2)->Range(32, 256)

GEMM_PAIR(matmul);
GEMM_PAIR(matmul_nt);
GEMM_PAIR(matmul_tn);

void BM_Predict(benchmark::State& state) {
    static const auto studies = data::generate_synthetic_studies(64, {}, 3);
    static const auto classifier = [] {
        ExperimentConfig cfg;
        cfg.train.mode = TrainMode::linear_probe;
        cfg.train.steps = 1;
        const auto enc = train::fresh_encoder(cfg, 1);
        return train::train_classifier(studies, studies, cfg, &enc).checkpoint;
    }();
    const auto threads = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(train::predict(classifier, studies, threads));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(studies.size()));
}
BENCHMARK(BM_Predict)->Name("predict/threads")->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
