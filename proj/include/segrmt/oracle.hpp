#pragma once

#include <memory>
#include <string>
#include <vector>

#include "segrmt/imaging.hpp"
#include "segrmt/kernels.hpp"

namespace segrmt {

/// Anything that maps an image to a label map of the same height and width.
/// Implementations must be deterministic and safe to call concurrently.
class SegmentationOracle {
 public:
  virtual ~SegmentationOracle() = default;
  [[nodiscard]] virtual LabelMap segment(const Image& img) const = 0;
  /// Recorded in run manifests.
  [[nodiscard]] virtual std::string descriptor() const = 0;
};

using kernels::Centroid;

/// Nearest-centroid colour classifier. Ties go to the lowest class index.
class PaletteSegmenter final : public SegmentationOracle {
 public:
  /// Throws InvalidConfig for fewer than two centroids or duplicate class indices.
  explicit PaletteSegmenter(std::vector<Centroid> centroids);

  /// The palette used by `builtin-palette` and the synthetic scenes.
  static PaletteSegmenter builtin();

  [[nodiscard]] LabelMap segment(const Image& img) const override;
  [[nodiscard]] std::string descriptor() const override;

  [[nodiscard]] const std::vector<Centroid>& centroids() const noexcept { return centroids_; }
  /// Colour of `label`; throws InvalidSpec when the class is not in the palette.
  [[nodiscard]] const Centroid& centroid_for(std::uint16_t label) const;

 private:
  std::vector<Centroid> centroids_;
};

LabelMap palette_segment(const Image& img, const PaletteSegmenter& seg);

}  // namespace segrmt
