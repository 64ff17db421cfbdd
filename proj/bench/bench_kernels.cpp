// Serial reference loops against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "segrmt/kernels.hpp"
#include "segrmt/oracle.hpp"

namespace k = segrmt::kernels;

namespace {

std::vector<std::uint8_t> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::uint8_t> v(n);
  for (auto& x : v) x = static_cast<std::uint8_t>(gen());
  return v;
}

std::vector<std::uint16_t> labels(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::uint16_t> v(n);
  for (auto& x : v) x = static_cast<std::uint16_t>(gen() % 19);
  return v;
}

std::size_t side(const benchmark::State& state) { return static_cast<std::size_t>(state.range(0)); }

template <bool Parallel>
void BM_SumSquaredDiff(benchmark::State& state) {
  const auto n = side(state) * side(state) * 3;
  const auto a = noise(n, 1), b = noise(n, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? k::parallel::sum_squared_diff(a, b) : k::serial::sum_squared_diff(a, b));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * n * 2));
}

template <bool Parallel>
void BM_ClassCounts(benchmark::State& state) {
  const auto n = side(state) * side(state);
  const auto p = labels(n, 3), t = labels(n, 4);
  for (auto _ : state) {
    auto c = Parallel ? k::parallel::class_counts(p, t) : k::serial::class_counts(p, t);
    benchmark::DoNotOptimize(c.intersection.data());
  }
}

template <bool Parallel>
void BM_NearestCentroid(benchmark::State& state) {
  const auto n = side(state) * side(state);
  const auto rgb = noise(n * 3, 5);
  const auto centroids = segrmt::PaletteSegmenter::builtin().centroids();
  std::vector<std::uint16_t> out(n);
  for (auto _ : state) {
    if (Parallel) k::parallel::nearest_centroid(rgb, centroids, out);
    else k::serial::nearest_centroid(rgb, centroids, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_BernoulliReplace(benchmark::State& state) {
  const auto n = side(state) * side(state) * 3;
  const auto src = noise(n, 6);
  auto buf = src;
  for (auto _ : state) {
    buf = src;
    if (Parallel) k::parallel::bernoulli_replace(buf, 3, 0.05, 0.05, 0, 255, 7);
    else k::serial::bernoulli_replace(buf, 3, 0.05, 0.05, 0, 255, 7);
    benchmark::DoNotOptimize(buf.data());
  }
}

template <bool Parallel>
void BM_AddGaussian(benchmark::State& state) {
  const auto n = side(state) * side(state) * 3;
  const auto src = noise(n, 8);
  auto buf = src;
  for (auto _ : state) {
    buf = src;
    if (Parallel) k::parallel::add_gaussian(buf, 3, -1, 0.0, 10.0, 9);
    else k::serial::add_gaussian(buf, 3, -1, 0.0, 10.0, 9);
    benchmark::DoNotOptimize(buf.data());
  }
}

}  // namespace

#define SEGRMT_BENCH_PAIR(fn)                                             \
  BENCHMARK(fn<false>)->Name(#fn "/serial")->Arg(64)->Arg(256)->Arg(1024); \
  BENCHMARK(fn<true>)->Name(#fn "/parallel")->Arg(64)->Arg(256)->Arg(1024)

SEGRMT_BENCH_PAIR(BM_SumSquaredDiff);
SEGRMT_BENCH_PAIR(BM_ClassCounts);
SEGRMT_BENCH_PAIR(BM_NearestCentroid);
SEGRMT_BENCH_PAIR(BM_BernoulliReplace);
SEGRMT_BENCH_PAIR(BM_AddGaussian);

BENCHMARK_MAIN();
