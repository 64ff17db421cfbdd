#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace segrmt {

struct Shape {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;

  [[nodiscard]] std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(height) * width;
  }
  [[nodiscard]] std::size_t samples() const noexcept { return pixels() * channels; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense H×W×C raster of 8-bit samples, row-major with interleaved channels.
class Image {
 public:
  Image() = default;
  /// Filled with `fill`. Throws InvalidParams on zero extents or channels not in {1, 3}.
  Image(std::uint32_t height, std::uint32_t width, std::uint32_t channels, std::uint8_t fill = 0);
  /// Takes ownership of `samples`; its size must equal height·width·channels.
  Image(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
        std::vector<std::uint8_t> samples);

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::uint32_t height() const noexcept { return shape_.height; }
  [[nodiscard]] std::uint32_t width() const noexcept { return shape_.width; }
  [[nodiscard]] std::uint32_t channels() const noexcept { return shape_.channels; }
  [[nodiscard]] std::size_t pixel_count() const noexcept { return shape_.pixels(); }

  [[nodiscard]] std::span<const std::uint8_t> samples() const& noexcept { return samples_; }
  [[nodiscard]] std::span<std::uint8_t> samples() & noexcept { return samples_; }
  // A span into a temporary would dangle.
  void samples() && = delete;

  [[nodiscard]] std::uint8_t at(std::uint32_t y, std::uint32_t x, std::uint32_t c) const {
    return samples_[(static_cast<std::size_t>(y) * shape_.width + x) * shape_.channels + c];
  }
  std::uint8_t& at(std::uint32_t y, std::uint32_t x, std::uint32_t c) {
    return samples_[(static_cast<std::size_t>(y) * shape_.width + x) * shape_.channels + c];
  }

  /// Global minimum / maximum over every sample (MIN_I, MAX_I).
  [[nodiscard]] std::uint8_t min_sample() const;
  [[nodiscard]] std::uint8_t max_sample() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Shape shape_{};
  std::vector<std::uint8_t> samples_;
};

/// Dense H×W raster of class indices.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::uint32_t height, std::uint32_t width, std::uint16_t fill = 0);
  LabelMap(std::uint32_t height, std::uint32_t width, std::vector<std::uint16_t> labels);

  [[nodiscard]] std::uint32_t height() const noexcept { return height_; }
  [[nodiscard]] std::uint32_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }

  [[nodiscard]] std::span<const std::uint16_t> labels() const& noexcept { return labels_; }
  [[nodiscard]] std::span<std::uint16_t> labels() & noexcept { return labels_; }
  void labels() && = delete;

  [[nodiscard]] std::uint16_t at(std::uint32_t y, std::uint32_t x) const {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint16_t& at(std::uint32_t y, std::uint32_t x) {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::vector<std::uint16_t> labels_;
};

struct IoUReport {
  std::map<std::uint16_t, double> per_class;
  double mean_iou = 0.0;
};

/// Peak used by psnr(); samples are 8-bit.
inline constexpr double kPsnrPeak = 255.0;

/// Mean squared error over all samples. Throws DimensionMismatch.
double mse(const Image& a, const Image& b);

/// 10·log10(255² / MSE); +infinity for identical images.
double psnr(const Image& original, const Image& distorted);

/// Per-class IoU over the classes present in either map; mean is unweighted.
IoUReport iou(const LabelMap& prediction, const LabelMap& truth);

/// Mean of per-pair mean IoU. Pairs are (prediction, truth).
double mean_iou_over_set(std::span<const std::pair<LabelMap, LabelMap>> pairs);

}  // namespace segrmt
