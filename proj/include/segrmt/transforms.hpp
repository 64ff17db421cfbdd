#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segrmt/imaging.hpp"

namespace segrmt {

enum class DistortionKind : std::uint8_t {
  RegionDropout = 0,
  LineColumnDropout = 1,
  LineStripping = 2,
  SaltPepper = 3,
  SpatialGaussian = 4,
  ChannelDropout = 5,
  ChannelGaussian = 6,
};

inline constexpr std::size_t kDistortionKindCount = 7;
inline constexpr std::array<DistortionKind, kDistortionKindCount> kAllDistortionKinds{
    DistortionKind::RegionDropout,  DistortionKind::LineColumnDropout,
    DistortionKind::LineStripping,  DistortionKind::SaltPepper,
    DistortionKind::SpatialGaussian, DistortionKind::ChannelDropout,
    DistortionKind::ChannelGaussian};

std::string_view to_string(DistortionKind kind) noexcept;
std::optional<DistortionKind> parse_distortion_kind(std::string_view name) noexcept;

/// True for the kinds that address a single color channel.
constexpr bool is_channel_kind(DistortionKind kind) noexcept {
  return kind == DistortionKind::ChannelDropout || kind == DistortionKind::ChannelGaussian;
}

enum class Orientation : std::uint8_t { Row = 0, Column = 1 };
enum class ConstChoice : std::uint8_t { Min = 0, Max = 1 };

/// Parameters of one distortion. Only the fields relevant to `kind` are
/// meaningful; the others keep their defaults.
struct DistortionParams {
  DistortionKind kind = DistortionKind::RegionDropout;
  double p_min = 0.0;
  double p_max = 0.0;
  Orientation orientation = Orientation::Row;
  std::uint32_t index = 0;
  ConstChoice const_choice = ConstChoice::Min;
  std::uint32_t stride = 1;
  double p_salt = 0.0;
  double p_pepper = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  std::uint32_t channel = 0;
  /// Pixel indices (y·W + x) the distortion may touch; absent means the whole image.
  std::optional<std::vector<std::uint32_t>> affected_indices;

  friend bool operator==(const DistortionParams&, const DistortionParams&) = default;
};

/// The continuous (or integer-valued) parameters that bounds constrain.
enum class NumericParam : std::uint8_t { PMin, PMax, PSalt, PPepper, Mu, Sigma, Stride };

std::string_view to_string(NumericParam param) noexcept;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  [[nodiscard]] double width() const noexcept { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Numeric parameters bounded for `kind`, in a fixed order.
std::span<const NumericParam> bounded_params(DistortionKind kind) noexcept;

double get_param(const DistortionParams& p, NumericParam which) noexcept;
void set_param(DistortionParams& p, NumericParam which, double value) noexcept;

/// Permissible parameter ranges, loadable from a key-value file.
class ParameterBounds {
 public:
  /// Defaults: probabilities in [0, 0.15], mu in [-20, 20], sigma in [0, 25],
  /// stride in [2, 32], max_affected_fraction 0.5.
  ParameterBounds();

  [[nodiscard]] const Interval& interval(DistortionKind kind, NumericParam param) const;
  void set_interval(DistortionKind kind, NumericParam param, Interval value);

  [[nodiscard]] double max_affected_fraction() const noexcept { return max_affected_fraction_; }
  void set_max_affected_fraction(double v) { max_affected_fraction_ = v; }

  /// Throws InvalidConfig when an interval is inverted or a fraction is out of range.
  void check() const;

  /// `Kind.param.lo = value` lines plus `max_affected_fraction`.
  [[nodiscard]] std::string to_text() const;
  static ParameterBounds from_text(std::string_view text);
  static ParameterBounds load(const std::filesystem::path& path);

  friend bool operator==(const ParameterBounds&, const ParameterBounds&) = default;

 private:
  std::array<std::array<Interval, 7>, kDistortionKindCount> intervals_{};
  double max_affected_fraction_ = 0.5;
};

/// Human-readable reasons `p` is not admissible for an image of `shape`
/// under `bounds`; empty when valid.
std::vector<std::string> param_violations(const DistortionParams& p, const Shape& shape,
                                          const ParameterBounds& bounds);

/// Throws InvalidParams / IndexOutOfRange / ChannelMismatch when `p` cannot be applied to `shape`.
/// Only structural preconditions are checked here; bounds are enforced by the genome.
void check_applicable(const DistortionParams& p, const Shape& shape);

Image region_dropout(const Image& img, const DistortionParams& p, std::uint64_t seed);
Image line_column_dropout(const Image& img, const DistortionParams& p);
Image line_stripping(const Image& img, const DistortionParams& p);
Image salt_pepper(const Image& img, const DistortionParams& p, std::uint64_t seed);
Image spatial_gaussian(const Image& img, const DistortionParams& p, std::uint64_t seed);
Image channel_dropout(const Image& img, const DistortionParams& p);
Image channel_gaussian(const Image& img, const DistortionParams& p, std::uint64_t seed);

/// Dispatches on p.kind and honours p.affected_indices.
Image apply_distortion(const Image& img, const DistortionParams& p, std::uint64_t seed);

struct SeededDistortion {
  DistortionParams params;
  std::uint64_t seed = 0;
};

/// Left fold of apply_distortion. Errors carry the failing position.
Image apply_sequence(const Image& img, std::span<const SeededDistortion> genes);

}  // namespace segrmt
