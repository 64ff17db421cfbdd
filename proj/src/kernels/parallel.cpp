#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <limits>

#include "segrmt/kernels.hpp"

namespace segrmt::kernels::parallel {

namespace {

// Below this many elements the fork/join overhead dominates.
constexpr std::int64_t kMinParallel = 1 << 14;

}  // namespace

MinMax min_max(std::span<const std::uint8_t> samples) {
  if (samples.empty()) return {};
  const auto n = static_cast<std::int64_t>(samples.size());
  std::uint8_t lo = 255, hi = 0;
#pragma omp parallel for reduction(min : lo) reduction(max : hi) if (n >= kMinParallel)
  for (std::int64_t i = 0; i < n; ++i) {
    lo = std::min(lo, samples[i]);
    hi = std::max(hi, samples[i]);
  }
  return {lo, hi};
}

std::uint64_t sum_squared_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const auto n = static_cast<std::int64_t>(a.size());
  std::uint64_t total = 0;
#pragma omp parallel for reduction(+ : total) if (n >= kMinParallel)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t d = static_cast<std::int64_t>(a[i]) - static_cast<std::int64_t>(b[i]);
    total += static_cast<std::uint64_t>(d * d);
  }
  return total;
}

ClassCounts class_counts(std::span<const std::uint16_t> predicted,
                         std::span<const std::uint16_t> truth) {
  const auto n = static_cast<std::int64_t>(predicted.size());
  std::uint16_t top = 0;
#pragma omp parallel for reduction(max : top) if (n >= kMinParallel)
  for (std::int64_t i = 0; i < n; ++i) top = std::max({top, predicted[i], truth[i]});
  const std::size_t classes = n == 0 ? 0 : std::size_t{top} + 1;
  ClassCounts counts{std::vector<std::uint64_t>(classes), std::vector<std::uint64_t>(classes),
                     std::vector<std::uint64_t>(classes)};
  if (n == 0) return counts;

#pragma omp parallel if (n >= kMinParallel)
  {
    std::vector<std::uint64_t> inter(classes), pred(classes), tru(classes);
#pragma omp for nowait
    for (std::int64_t i = 0; i < n; ++i) {
      ++pred[predicted[i]];
      ++tru[truth[i]];
      if (predicted[i] == truth[i]) ++inter[predicted[i]];
    }
#pragma omp critical(segrmt_class_counts)
    for (std::size_t c = 0; c < classes; ++c) {
      counts.intersection[c] += inter[c];
      counts.predicted[c] += pred[c];
      counts.truth[c] += tru[c];
    }
  }
  return counts;
}

void nearest_centroid(std::span<const std::uint8_t> rgb, std::span<const Centroid> centroids,
                      std::span<std::uint16_t> labels) {
  const auto pixels = static_cast<std::int64_t>(labels.size());
#pragma omp parallel for schedule(static) if (pixels >= kMinParallel / 4)
  for (std::int64_t p = 0; p < pixels; ++p) {
    std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
    std::uint16_t best = 0;
    const std::uint8_t* px = rgb.data() + 3 * p;
    for (const auto& c : centroids) {
      const std::int64_t dr = std::int64_t{px[0]} - c.r;
      const std::int64_t dg = std::int64_t{px[1]} - c.g;
      const std::int64_t db = std::int64_t{px[2]} - c.b;
      const std::int64_t d = dr * dr + dg * dg + db * db;
      if (d < best_d || (d == best_d && c.label < best)) {
        best_d = d;
        best = c.label;
      }
    }
    labels[p] = best;
  }
}

void bernoulli_replace(std::span<std::uint8_t> samples, std::size_t channels, double p_low,
                       double p_high, std::uint8_t low, std::uint8_t high, std::uint64_t seed) {
  const auto pixels = static_cast<std::int64_t>(samples.size() / channels);
#pragma omp parallel for schedule(static) if (pixels >= kMinParallel)
  for (std::int64_t p = 0; p < pixels; ++p) {
    const auto outcome = bernoulli_outcome(seed, static_cast<std::size_t>(p), p_low, p_high);
    if (outcome == Replacement::None) continue;
    const std::uint8_t value = outcome == Replacement::Low ? low : high;
    std::uint8_t* px = samples.data() + p * channels;
    for (std::size_t c = 0; c < channels; ++c) px[c] = value;
  }
}

void add_gaussian(std::span<std::uint8_t> samples, std::size_t channels, int channel, double mu,
                  double sigma, std::uint64_t seed) {
  const auto pixels = static_cast<std::int64_t>(samples.size() / channels);
  const std::size_t c_begin = channel >= 0 ? static_cast<std::size_t>(channel) : 0;
  const std::size_t c_end = channel >= 0 ? c_begin + 1 : channels;
#pragma omp parallel for schedule(static) if (pixels >= kMinParallel / 4)
  for (std::int64_t p = 0; p < pixels; ++p) {
    for (std::size_t c = c_begin; c < c_end; ++c) {
      const std::size_t i = static_cast<std::size_t>(p) * channels + c;
      samples[i] = quantize(samples[i] + gaussian_draw(seed, i, mu, sigma));
    }
  }
}

}  // namespace segrmt::kernels::parallel
