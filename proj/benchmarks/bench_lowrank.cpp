#include <dpact/lowrank.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace dpact;

// Gradient-step shaped input: a rank-R image plus one rank-1 term per frame of a subset.
LowRankUpdate bench_update(Index n, Index k, Index terms) {
    LowRankUpdate x(n, k);
    x.append_block(Matrix::Random(n, terms), Matrix::Random(k, terms));
    return x;
}

void BM_TruncatedSvd(benchmark::State& state) {
    const auto n = static_cast<Index>(state.range(0));
    const auto rank = static_cast<Index>(state.range(1));
    const LowRankUpdate x = bench_update(n, 60, 2 * rank + 20);
    const SvdOptions options{rank, 10, 2, 7};
    for (auto _ : state) benchmark::DoNotOptimize(truncated_svd(x, options).S.data());
}
BENCHMARK(BM_TruncatedSvd)->Args({1200, 4})->Args({6000, 10})->Args({48000, 40});

void BM_ProxNuclear(benchmark::State& state) {
    const auto n = static_cast<Index>(state.range(0));
    const LowRankUpdate x = bench_update(n, 60, 28);
    const SvdOptions options{4, 10, 2, 7};
    for (auto _ : state) benchmark::DoNotOptimize(prox_nuclear(x, 0.1, options).S.data());
}
BENCHMARK(BM_ProxNuclear)->Arg(1200)->Arg(6000);

}  // namespace
