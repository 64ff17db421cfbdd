#include <cmath>
#include <numbers>

#include "segrmt/kernels.hpp"
#include "segrmt/random.hpp"

namespace segrmt::kernels {

Replacement bernoulli_outcome(std::uint64_t seed, std::size_t pixel, double p_low, double p_high) {
  const double u = unit_double(counter_hash(seed, pixel));
  if (u < p_low) return Replacement::Low;
  if (u < p_low + p_high) return Replacement::High;
  return Replacement::None;
}

double gaussian_draw(std::uint64_t seed, std::size_t sample, double mu, double sigma) {
  if (sigma == 0.0) return mu;
  const double u1 = unit_double(counter_hash(seed, 2 * static_cast<std::uint64_t>(sample)));
  const double u2 = unit_double(counter_hash(seed, 2 * static_cast<std::uint64_t>(sample) + 1));
  const double radius = std::sqrt(-2.0 * std::log1p(-u1));
  return mu + sigma * radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint8_t quantize(double value) {
  const double r = std::round(value);
  if (!(r > 0.0)) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

}  // namespace segrmt::kernels
