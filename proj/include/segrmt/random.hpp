#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace segrmt {

/// Identifier recorded in run manifests. Sequential draws come from
/// mt19937_64 (fully specified by the standard); per-sample draws inside the
/// pixel kernels come from a SplitMix64 counter hash. Distribution helpers
/// are implemented here rather than through <random> distributions, whose
/// algorithms differ between standard libraries.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64-counter/box-muller/v1";

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stateless draw number `counter` of the stream keyed by `seed`.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(seed) ^ (counter * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

/// Maps 64 random bits to [0, 1) with 53 bits of precision.
constexpr double unit_double(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// FNV-1a, used to derive per-entry seeds from string ids.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return unit_double(engine_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], rejection-sampled so there is no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace segrmt
