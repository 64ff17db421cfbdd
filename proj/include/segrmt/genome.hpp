#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segrmt/random.hpp"
#include "segrmt/transforms.hpp"

namespace segrmt {

/// One gene: an activation bit, the distortion it encodes and its own seed.
struct SubTransform {
  bool active = true;
  DistortionParams params;
  std::uint64_t seed = 0;

  friend bool operator==(const SubTransform&, const SubTransform&) = default;
};

struct Chromosome {
  std::vector<SubTransform> genes;

  friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

struct GenomeConfig {
  std::size_t min_genes = 1;
  std::size_t max_genes = 6;
  ParameterBounds bounds;
  std::array<double, kDistortionKindCount> kind_weights{1, 1, 1, 1, 1, 1, 1};
  /// Probability that a freshly drawn gene starts active.
  double activation_probability = 0.5;
  /// Image the chromosomes target; fixes line indices, channels and affected-index range.
  Shape target_shape{64, 64, 3};

  /// Throws InvalidConfig.
  void check() const;
};

/// Kinds that can be drawn under `cfg`: positive weight and compatible with the channel count.
std::vector<DistortionKind> drawable_kinds(const GenomeConfig& cfg);

DistortionKind draw_kind(const GenomeConfig& cfg, Rng& rng);
/// Fresh parameters for `kind`, uniform within the bounds and the target shape.
DistortionParams random_params(DistortionKind kind, const GenomeConfig& cfg, Rng& rng);
SubTransform random_gene(const GenomeConfig& cfg, Rng& rng);

Chromosome random_chromosome(const GenomeConfig& cfg, std::uint64_t seed);

struct Violation {
  /// Absent for chromosome-level rules.
  std::optional<std::size_t> gene;
  std::string rule;
};

/// Every broken invariant; empty means valid.
std::vector<Violation> validate(const Chromosome& ch, const GenomeConfig& cfg, const Shape& image_shape);

/// Active genes in order. An all-inactive chromosome yields the identity program.
std::vector<SeededDistortion> to_transform_sequence(const Chromosome& ch);

// Binary codec; the layout is documented in docs/formats.md.
inline constexpr std::array<std::uint8_t, 4> kChromosomeMagic{'S', 'R', 'M', 'T'};
inline constexpr std::uint8_t kChromosomeVersion = 0x01;

std::vector<std::uint8_t> encode(const Chromosome& ch);
/// Throws MalformedPayload with the byte offset of the problem.
Chromosome decode(std::span<const std::uint8_t> bytes);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Throws MalformedPayload on odd length or non-hex characters.
std::vector<std::uint8_t> from_hex(std::string_view text);

}  // namespace segrmt
