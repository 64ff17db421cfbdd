#include <algorithm>
#include <cmath>
#include <set>

#include "segrmt/dataset.hpp"
#include "segrmt/error.hpp"
#include "segrmt/random.hpp"

namespace segrmt {

namespace {

std::string shape_text(std::uint32_t h, std::uint32_t w) { return std::to_string(h) + "x" + std::to_string(w); }

}  // namespace

DatasetLayout DatasetLayout::from_keys(const KeyValueFile& kv) {
  DatasetLayout l;
  for (const auto& [k, v] : kv.entries()) {
    if (k == "image_dir") l.image_dir = v;
    else if (k == "label_dir") l.label_dir = v;
    else if (k == "image_ext") l.image_ext = v;
    else if (k == "label_ext") l.label_ext = v;
    else throw Error(ErrorCode::ConfigError, "unknown layout key '" + k + "'");
  }
  return l;
}

DatasetLayout DatasetLayout::load(const fs::path& path) {
  return from_keys(KeyValueFile::load(path, ErrorCode::ConfigError));
}

KeyValueFile DatasetLayout::to_keys() const {
  KeyValueFile kv;
  kv.set("image_dir", image_dir);
  kv.set("label_dir", label_dir);
  kv.set("image_ext", image_ext);
  kv.set("label_ext", label_ext);
  return kv;
}

DatasetIndex load_dataset(const fs::path& root, const DatasetLayout& layout) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::IoError, "dataset root " + root.string() + " is not a directory");
  DatasetIndex index;
  index.root = root;
  index.layout = layout;
  const fs::path image_dir = root / layout.image_dir;
  if (!fs::is_directory(image_dir, ec)) return index;

  for (const auto& item : fs::directory_iterator(image_dir)) {
    if (!item.is_regular_file()) continue;
    const auto name = item.path().filename().string();
    if (name.size() <= layout.image_ext.size() || !name.ends_with(layout.image_ext)) continue;
    DatasetEntry e;
    e.id = name.substr(0, name.size() - layout.image_ext.size());
    e.image_path = item.path();
    e.label_path = root / layout.label_dir / (e.id + layout.label_ext);
    index.entries.push_back(std::move(e));
  }
  std::sort(index.entries.begin(), index.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.id < b.id; });

  std::uint32_t max_label = 0;
  bool any = false;
  for (const auto& e : index.entries) {
    if (!fs::is_regular_file(e.label_path, ec))
      throw Error(ErrorCode::MissingLabel, "no label map for '" + e.id + "' (expected " + e.label_path.string() + ")");
    const auto loaded = load_entry(e);
    for (auto v : loaded.labels.labels()) max_label = std::max<std::uint32_t>(max_label, v);
    any = true;
  }
  index.class_count = any ? max_label + 1 : 0;
  return index;
}

LoadedEntry load_entry(const DatasetEntry& entry) {
  LoadedEntry out{read_image(entry.image_path), read_labels(entry.label_path)};
  if (out.image.height() != out.labels.height() || out.image.width() != out.labels.width())
    throw Error(ErrorCode::ShapeMismatch, "'" + entry.id + "': image is " +
                                              shape_text(out.image.height(), out.image.width()) + ", labels are " +
                                              shape_text(out.labels.height(), out.labels.width()));
  return out;
}

fs::path export_adversarial(const DatasetEntry& entry, const Image& distorted, const LabelMap& labels,
                            ManifestRecord record, const fs::path& out_root, const DatasetLayout& layout,
                            ManifestWriter& manifest, double retention_threshold) {
  if (!(record.psnr > retention_threshold))
    throw Error(ErrorCode::GateViolation, "'" + entry.id + "' has PSNR " + format_double(record.psnr) +
                                              " dB, retention needs more than " + format_double(retention_threshold));
  const fs::path rel_image = fs::path(layout.image_dir) / (entry.id + layout.image_ext);
  const fs::path rel_label = fs::path(layout.label_dir) / (entry.id + layout.label_ext);
  write_image(out_root / rel_image, distorted);
  write_labels(out_root / rel_label, labels);
  record.id = entry.id;
  record.status = "exported";
  record.output = rel_image.generic_string();
  manifest.append(manifest_line(record));
  return out_root / rel_image;
}

Scene synth_scene(const SceneSpec& spec, std::uint64_t seed, const PaletteSegmenter& palette) {
  if (spec.height == 0 || spec.width == 0) throw Error(ErrorCode::InvalidSpec, "scene needs non-zero extent");
  (void)palette.centroid_for(spec.background);

  const auto& cs = palette.centroids();
  double min_dist = INFINITY;
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      const double dr = cs[i].r - cs[j].r, dg = cs[i].g - cs[j].g, db = cs[i].b - cs[j].b;
      min_dist = std::min(min_dist, std::sqrt(dr * dr + dg * dg + db * db));
    }
  if (spec.jitter > 0 && !(static_cast<double>(spec.jitter) * std::sqrt(3.0) < min_dist / 2.0))
    throw Error(ErrorCode::InvalidSpec, "jitter " + std::to_string(spec.jitter) +
                                            " could move pixels across a palette boundary");

  auto covers = [](const SceneRegion& r, std::uint32_t y, std::uint32_t x) {
    if (y < r.y0 || x < r.x0 || y - r.y0 >= r.height || x - r.x0 >= r.width) return false;
    switch (r.kind) {
      case SceneRegion::Kind::Rect: return true;
      case SceneRegion::Kind::RowStripes: return (y - r.y0) % r.period < r.thickness;
      case SceneRegion::Kind::ColumnStripes: return (x - r.x0) % r.period < r.thickness;
    }
    return false;
  };

  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    const auto& r = spec.regions[i];
    (void)palette.centroid_for(r.label);
    if (r.height == 0 || r.width == 0)
      throw Error(ErrorCode::InvalidSpec, "region " + std::to_string(i) + " is empty");
    if (r.kind != SceneRegion::Kind::Rect && (r.period == 0 || r.thickness == 0 || r.thickness > r.period))
      throw Error(ErrorCode::InvalidSpec, "region " + std::to_string(i) + " needs 0 < thickness <= period");
  }

  LabelMap labels(spec.height, spec.width, spec.background);
  for (std::uint32_t y = 0; y < spec.height; ++y)
    for (std::uint32_t x = 0; x < spec.width; ++x) {
      const SceneRegion* top = nullptr;
      std::size_t top_index = 0;
      for (std::size_t i = 0; i < spec.regions.size(); ++i) {
        const auto& r = spec.regions[i];
        if (!covers(r, y, x)) continue;
        if (top && r.priority == top->priority && r.label != top->label)
          throw Error(ErrorCode::InvalidSpec, "regions " + std::to_string(top_index) + " and " + std::to_string(i) +
                                                  " overlap at (" + std::to_string(y) + "," + std::to_string(x) +
                                                  ") with equal priority and different classes");
        if (!top || r.priority > top->priority) {
          top = &r;
          top_index = i;
        }
      }
      if (top) labels.at(y, x) = top->label;
    }

  Image image(spec.height, spec.width, 3);
  for (std::uint32_t y = 0; y < spec.height; ++y)
    for (std::uint32_t x = 0; x < spec.width; ++x) {
      const auto& c = palette.centroid_for(labels.at(y, x));
      const std::uint8_t rgb[3] = {c.r, c.g, c.b};
      for (std::uint32_t ch = 0; ch < 3; ++ch) {
        int v = rgb[ch];
        if (spec.jitter > 0) {
          const std::uint64_t sample = (static_cast<std::uint64_t>(y) * spec.width + x) * 3 + ch;
          const auto span = static_cast<std::uint64_t>(2 * spec.jitter + 1);
          v += static_cast<int>(counter_hash(seed, sample) % span) - static_cast<int>(spec.jitter);
        }
        image.at(y, x, ch) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  return {std::move(image), std::move(labels)};
}

SceneSpec random_scene_spec(std::uint32_t height, std::uint32_t width, std::uint64_t seed,
                            const PaletteSegmenter& palette) {
  Rng rng(seed);
  const auto& cs = palette.centroids();
  auto pick_label = [&] {
    return cs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cs.size()) - 1))].label;
  };
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.background = pick_label();
  const auto count = rng.uniform_int(2, 6);
  for (std::int64_t i = 0; i < count; ++i) {
    SceneRegion r;
    r.priority = static_cast<int>(i);
    r.label = pick_label();
    r.height = static_cast<std::uint32_t>(rng.uniform_int(std::max<std::int64_t>(1, height / 4), height));
    r.width = static_cast<std::uint32_t>(rng.uniform_int(std::max<std::int64_t>(1, width / 4), width));
    r.y0 = static_cast<std::uint32_t>(rng.uniform_int(0, height - r.height));
    r.x0 = static_cast<std::uint32_t>(rng.uniform_int(0, width - r.width));
    const double u = rng.uniform();
    if (u < 0.2) {
      r.kind = rng.bernoulli(0.5) ? SceneRegion::Kind::RowStripes : SceneRegion::Kind::ColumnStripes;
      r.period = static_cast<std::uint32_t>(rng.uniform_int(4, 12));
      r.thickness = static_cast<std::uint32_t>(rng.uniform_int(1, r.period - 1));
    }
    spec.regions.push_back(r);
  }
  return spec;
}

}  // namespace segrmt
