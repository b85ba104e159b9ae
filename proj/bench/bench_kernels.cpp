// Serial reference vs OpenMP kernels, plus the index's linear scan.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sshash/hamming_index.hpp"
#include "sshash/kernels.hpp"

namespace {

using namespace sshash;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

std::vector<std::uint64_t> random_words(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> v(n);
    for (auto& w : v) w = rng();
    return v;
}

template <auto Gemm>
void BM_gemm_nn(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const std::size_t k = 128, n = 256;
    const auto a = random_values(m * k, 1), b = random_values(k * n, 2);
    std::vector<double> c(m * n);
    for (auto _ : state) {
        Gemm(a, b, c, m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * m * k * n));
}

template <auto Scan>
void BM_hamming_scan(benchmark::State& state) {
    const auto items = static_cast<std::size_t>(state.range(0));
    const std::size_t queries = 64;
    const auto q = random_words(queries, 3), x = random_words(items, 4);
    std::vector<std::uint32_t> out(queries * items);
    for (auto _ : state) {
        Scan(q, x, 1, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(queries * items));
}

// Full top-k retrieval at B = 32; items/s counts Hamming comparisons.
void BM_top_k_32bit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(5);
    std::vector<BitCode> codes;
    std::vector<std::uint64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        BitCode c(32);
        const auto w = rng();
        for (std::size_t b = 0; b < 32; ++b) c.set(b, (w >> b) & 1U);
        codes.push_back(c);
        ids[i] = i;
    }
    const HashIndex index(32, codes, ids);
    const BitCode query = codes[n / 2];
    for (auto _ : state) benchmark::DoNotOptimize(top_k(query, index, 100));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

BENCHMARK(BM_gemm_nn<&kernels::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(100)->Arg(1000);
BENCHMARK(BM_gemm_nn<&kernels::parallel::gemm_nn>)->Name("gemm_nn/parallel")->Arg(100)->Arg(1000);
BENCHMARK(BM_hamming_scan<&kernels::serial::hamming_scan>)
    ->Name("hamming_scan/serial")
    ->Arg(1 << 14)
    ->Arg(1 << 17);
BENCHMARK(BM_hamming_scan<&kernels::parallel::hamming_scan>)
    ->Name("hamming_scan/parallel")
    ->Arg(1 << 14)
    ->Arg(1 << 17);
BENCHMARK(BM_top_k_32bit)->Arg(1 << 16)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
