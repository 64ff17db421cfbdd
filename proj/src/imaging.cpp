#include "segrmt/imaging.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "segrmt/error.hpp"
#include "segrmt/kernels.hpp"

namespace segrmt {

namespace {

std::string shape_text(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

void check_extent(std::uint32_t height, std::uint32_t width, std::uint32_t channels) {
  if (height == 0 || width == 0) throw Error(ErrorCode::InvalidParams, "image extents must be >= 1");
  if (channels != 1 && channels != 3)
    throw Error(ErrorCode::InvalidParams, "channels must be 1 or 3, got " + std::to_string(channels));
}

}  // namespace

Image::Image(std::uint32_t height, std::uint32_t width, std::uint32_t channels, std::uint8_t fill)
    : shape_{height, width, channels} {
  check_extent(height, width, channels);
  samples_.assign(shape_.samples(), fill);
}

Image::Image(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
             std::vector<std::uint8_t> samples)
    : shape_{height, width, channels}, samples_(std::move(samples)) {
  check_extent(height, width, channels);
  if (samples_.size() != shape_.samples())
    throw Error(ErrorCode::DimensionMismatch,
                "sample count " + std::to_string(samples_.size()) + " does not match " +
                    shape_text(shape_));
}

std::uint8_t Image::min_sample() const { return kernels::parallel::min_max(samples_).min; }
std::uint8_t Image::max_sample() const { return kernels::parallel::min_max(samples_).max; }

LabelMap::LabelMap(std::uint32_t height, std::uint32_t width, std::uint16_t fill)
    : height_(height), width_(width), labels_(static_cast<std::size_t>(height) * width, fill) {}

LabelMap::LabelMap(std::uint32_t height, std::uint32_t width, std::vector<std::uint16_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  if (labels_.size() != pixel_count())
    throw Error(ErrorCode::DimensionMismatch,
                "label count " + std::to_string(labels_.size()) + " does not match " +
                    std::to_string(height) + "x" + std::to_string(width));
}

double mse(const Image& a, const Image& b) {
  if (a.shape() != b.shape())
    throw Error(ErrorCode::DimensionMismatch,
                "mse: " + shape_text(a.shape()) + " vs " + shape_text(b.shape()));
  if (a.samples().empty()) return 0.0;
  const std::uint64_t sum = kernels::parallel::sum_squared_diff(a.samples(), b.samples());
  return static_cast<double>(sum) / static_cast<double>(a.samples().size());
}

double psnr(const Image& original, const Image& distorted) {
  const double err = mse(original, distorted);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPsnrPeak * kPsnrPeak / err);
}

IoUReport iou(const LabelMap& prediction, const LabelMap& truth) {
  if (prediction.height() != truth.height() || prediction.width() != truth.width())
    throw Error(ErrorCode::DimensionMismatch,
                "iou: " + std::to_string(prediction.height()) + "x" +
                    std::to_string(prediction.width()) + " vs " + std::to_string(truth.height()) +
                    "x" + std::to_string(truth.width()));
  const auto counts = kernels::parallel::class_counts(prediction.labels(), truth.labels());
  IoUReport report;
  double total = 0.0;
  for (std::size_t c = 0; c < counts.intersection.size(); ++c) {
    const std::uint64_t uni = counts.predicted[c] + counts.truth[c] - counts.intersection[c];
    if (uni == 0) continue;
    const double value = static_cast<double>(counts.intersection[c]) / static_cast<double>(uni);
    report.per_class.emplace(static_cast<std::uint16_t>(c), value);
    total += value;
  }
  report.mean_iou = report.per_class.empty() ? 0.0 : total / static_cast<double>(report.per_class.size());
  return report;
}

double mean_iou_over_set(std::span<const std::pair<LabelMap, LabelMap>> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptySet, "mean_iou_over_set needs at least one pair");
  double total = 0.0;
  for (const auto& [prediction, truth] : pairs) total += iou(prediction, truth).mean_iou;
  return total / static_cast<double>(pairs.size());
}

}  // namespace segrmt
