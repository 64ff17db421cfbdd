#pragma once

// Data-parallel pixel kernels. Each kernel exists twice with identical
// signatures: `serial` is the plain reference loop, `parallel` is the OpenMP
// version used by the library. Both must produce bit-identical results; the
// random kernels draw per sample from a counter hash so the iteration order
// never influences the output.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace segrmt::kernels {

struct MinMax {
  std::uint8_t min = 0;
  std::uint8_t max = 0;
};

/// Intersection and per-map pixel counts for every class index up to the
/// largest label seen in either map.
struct ClassCounts {
  std::vector<std::uint64_t> intersection;
  std::vector<std::uint64_t> predicted;
  std::vector<std::uint64_t> truth;
};

struct Centroid {
  std::uint16_t label = 0;
  std::uint8_t r = 0, g = 0, b = 0;
};

/// Which of the replaced values a Bernoulli draw selected.
enum class Replacement : std::uint8_t { None, Low, High };

/// Outcome of draw `pixel` for a three-way Bernoulli split: [0,p_low) → Low,
/// [p_low, p_low+p_high) → High, otherwise None.
Replacement bernoulli_outcome(std::uint64_t seed, std::size_t pixel, double p_low, double p_high);

/// N(mu, sigma²) draw number `sample` of the stream keyed by `seed` (Box-Muller).
double gaussian_draw(std::uint64_t seed, std::size_t sample, double mu, double sigma);

/// Round half away from zero, then clamp to [0, 255].
std::uint8_t quantize(double value);

#define SEGRMT_KERNEL_DECLS                                                                     \
  MinMax min_max(std::span<const std::uint8_t> samples);                                        \
  std::uint64_t sum_squared_diff(std::span<const std::uint8_t> a,                               \
                                 std::span<const std::uint8_t> b);                              \
  ClassCounts class_counts(std::span<const std::uint16_t> predicted,                            \
                           std::span<const std::uint16_t> truth);                               \
  void nearest_centroid(std::span<const std::uint8_t> rgb, std::span<const Centroid> centroids, \
                        std::span<std::uint16_t> labels);                                       \
  void bernoulli_replace(std::span<std::uint8_t> samples, std::size_t channels, double p_low,   \
                         double p_high, std::uint8_t low, std::uint8_t high,                    \
                         std::uint64_t seed);                                                   \
  void add_gaussian(std::span<std::uint8_t> samples, std::size_t channels, int channel,         \
                    double mu, double sigma, std::uint64_t seed);

namespace serial {
SEGRMT_KERNEL_DECLS
}  // namespace serial

namespace parallel {
SEGRMT_KERNEL_DECLS
}  // namespace parallel

#undef SEGRMT_KERNEL_DECLS

}  // namespace segrmt::kernels
