#include "segrmt/oracle.hpp"

#include <algorithm>
#include <set>

#include "segrmt/error.hpp"

namespace segrmt {

PaletteSegmenter::PaletteSegmenter(std::vector<Centroid> centroids) : centroids_(std::move(centroids)) {
  if (centroids_.size() < 2) throw Error(ErrorCode::InvalidConfig, "palette needs at least two centroids");
  std::set<std::uint16_t> seen;
  for (const auto& c : centroids_)
    if (!seen.insert(c.label).second)
      throw Error(ErrorCode::InvalidConfig, "duplicate palette class " + std::to_string(c.label));
}

PaletteSegmenter PaletteSegmenter::builtin() {
  // A muted street-scene palette. Neighbouring classes sit 30-45 units apart
  // in RGB so that fidelity-preserving perturbations can still move pixels
  // across decision boundaries.
  return PaletteSegmenter({
      {0, 96, 96, 96},     // background
      {1, 128, 100, 128},  // road
      {2, 92, 124, 72},    // vegetation
      {3, 120, 136, 168},  // sky
      {4, 72, 80, 120},    // vehicle
  });
}

LabelMap PaletteSegmenter::segment(const Image& img) const {
  if (img.channels() != 3)
    throw Error(ErrorCode::ChannelMismatch, "palette segmentation needs a 3-channel image");
  LabelMap out(img.height(), img.width());
  kernels::parallel::nearest_centroid(img.samples(), centroids_, out.labels());
  return out;
}

std::string PaletteSegmenter::descriptor() const {
  std::string out = "palette:";
  for (std::size_t i = 0; i < centroids_.size(); ++i) {
    const auto& c = centroids_[i];
    if (i) out += ";";
    out += std::to_string(c.label) + "=" + std::to_string(c.r) + "," + std::to_string(c.g) + "," +
           std::to_string(c.b);
  }
  return out;
}

const Centroid& PaletteSegmenter::centroid_for(std::uint16_t label) const {
  const auto it = std::find_if(centroids_.begin(), centroids_.end(),
                               [&](const Centroid& c) { return c.label == label; });
  if (it == centroids_.end())
    throw Error(ErrorCode::InvalidSpec, "class " + std::to_string(label) + " has no palette colour");
  return *it;
}

LabelMap palette_segment(const Image& img, const PaletteSegmenter& seg) { return seg.segment(img); }

}  // namespace segrmt
