// Reference loops. Kept deliberately naive: tests compare the OpenMP kernels
// against these.

#include <algorithm>
#include <limits>

#include "segrmt/kernels.hpp"

namespace segrmt::kernels::serial {

MinMax min_max(std::span<const std::uint8_t> samples) {
  MinMax out{255, 0};
  for (auto s : samples) {
    out.min = std::min(out.min, s);
    out.max = std::max(out.max, s);
  }
  if (samples.empty()) out = {};
  return out;
}

std::uint64_t sum_squared_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = static_cast<std::int64_t>(a[i]) - static_cast<std::int64_t>(b[i]);
    total += static_cast<std::uint64_t>(d * d);
  }
  return total;
}

ClassCounts class_counts(std::span<const std::uint16_t> predicted,
                         std::span<const std::uint16_t> truth) {
  std::uint16_t top = 0;
  for (auto v : predicted) top = std::max(top, v);
  for (auto v : truth) top = std::max(top, v);
  const std::size_t n = predicted.empty() && truth.empty() ? 0 : std::size_t{top} + 1;
  ClassCounts counts{std::vector<std::uint64_t>(n), std::vector<std::uint64_t>(n),
                     std::vector<std::uint64_t>(n)};
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    ++counts.predicted[predicted[i]];
    ++counts.truth[truth[i]];
    if (predicted[i] == truth[i]) ++counts.intersection[predicted[i]];
  }
  return counts;
}

void nearest_centroid(std::span<const std::uint8_t> rgb, std::span<const Centroid> centroids,
                      std::span<std::uint16_t> labels) {
  for (std::size_t p = 0; p < labels.size(); ++p) {
    std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
    std::uint16_t best = 0;
    for (const auto& c : centroids) {
      const std::int64_t dr = std::int64_t{rgb[3 * p]} - c.r;
      const std::int64_t dg = std::int64_t{rgb[3 * p + 1]} - c.g;
      const std::int64_t db = std::int64_t{rgb[3 * p + 2]} - c.b;
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
  const std::size_t pixels = samples.size() / channels;
  for (std::size_t p = 0; p < pixels; ++p) {
    const auto outcome = bernoulli_outcome(seed, p, p_low, p_high);
    if (outcome == Replacement::None) continue;
    const std::uint8_t value = outcome == Replacement::Low ? low : high;
    for (std::size_t c = 0; c < channels; ++c) samples[p * channels + c] = value;
  }
}

void add_gaussian(std::span<std::uint8_t> samples, std::size_t channels, int channel, double mu,
                  double sigma, std::uint64_t seed) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (channel >= 0 && i % channels != static_cast<std::size_t>(channel)) continue;
    samples[i] = quantize(samples[i] + gaussian_draw(seed, i, mu, sigma));
  }
}

}  // namespace segrmt::kernels::serial
