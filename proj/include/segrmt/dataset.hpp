#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "segrmt/evolution.hpp"
#include "segrmt/genome.hpp"
#include "segrmt/imaging.hpp"
#include "segrmt/kvfile.hpp"
#include "segrmt/oracle.hpp"

namespace segrmt {

namespace fs = std::filesystem;

// Binary netpbm rasters. Images are P6 (RGB) or P5 (gray) with maxval 255;
// label maps are P5 with maxval up to 65535 (16-bit samples are big-endian).
Image read_image(const fs::path& path);
LabelMap read_labels(const fs::path& path);
/// Both throw IoError when the file cannot be written.
void write_image(const fs::path& path, const Image& img);
void write_labels(const fs::path& path, const LabelMap& labels);

std::vector<std::uint8_t> encode_netpbm(const Image& img);
std::vector<std::uint8_t> encode_netpbm(const LabelMap& labels);
/// Throw DecodeError naming `what`.
Image decode_image(std::span<const std::uint8_t> bytes, const std::string& what = "image");
LabelMap decode_labels(std::span<const std::uint8_t> bytes, const std::string& what = "labels");

struct DatasetLayout {
  std::string image_dir = "images";
  std::string label_dir = "labels";
  std::string image_ext = ".ppm";
  std::string label_ext = ".pgm";

  /// Keys: image_dir, label_dir, image_ext, label_ext. Unknown keys throw ConfigError.
  static DatasetLayout from_keys(const KeyValueFile& kv);
  static DatasetLayout load(const fs::path& path);
  [[nodiscard]] KeyValueFile to_keys() const;
};

struct DatasetEntry {
  std::string id;
  fs::path image_path;
  fs::path label_path;
};

struct DatasetIndex {
  fs::path root;
  DatasetLayout layout;
  /// Sorted by id.
  std::vector<DatasetEntry> entries;
  /// One past the largest label seen in any map.
  std::size_t class_count = 0;
};

/// Pairs `<image_dir>/<id><image_ext>` with `<label_dir>/<id><label_ext>`.
/// Every pair is decoded once to check it. Throws IoError (missing root),
/// MissingLabel, DecodeError, ShapeMismatch.
DatasetIndex load_dataset(const fs::path& root, const DatasetLayout& layout = {});

struct LoadedEntry {
  Image image;
  LabelMap labels;
};
LoadedEntry load_entry(const DatasetEntry& entry);

// Run manifest: one JSON object per line. The first line is the header, then
// one line per dataset entry in id order, then a footer. Only the header and
// footer carry wall-clock timestamps.
struct ManifestHeader {
  std::string tool_version;
  std::uint64_t master_seed = 0;
  KeyValueFile ga_config;
  std::string parameter_bounds;
  std::string oracle;
  std::string rng_algorithm;
  double retention_threshold = 20.0;
  std::size_t repeat = 0;
  std::string started_at;
};

struct ManifestRecord {
  std::string id;
  /// "exported", "discarded" (best candidate failed the retention gate) or "failed".
  std::string status;
  std::uint64_t seed = 0;
  std::string chromosome_hex;
  double fitness = 0.0;
  std::optional<double> iou;
  double psnr = 0.0;
  std::optional<double> clean_iou;
  std::size_t generations = 0;
  std::string termination;
  std::size_t oracle_calls = 0;
  /// Relative to the output root.
  std::string output;
  std::string error;
};

struct ManifestFooter {
  std::size_t exported = 0;
  std::size_t discarded = 0;
  std::size_t failed = 0;
  std::string finished_at;
};

struct RunManifest {
  ManifestHeader header;
  std::vector<ManifestRecord> records;
  std::optional<ManifestFooter> footer;
};

std::string manifest_line(const ManifestHeader& h);
std::string manifest_line(const ManifestRecord& r);
std::string manifest_line(const ManifestFooter& f);

/// Throws DecodeError on a malformed line (with its number).
RunManifest read_manifest(const fs::path& path);

/// Append-only manifest file; writes are serialized and flushed line by line.
class ManifestWriter {
 public:
  /// Truncates `path`. Throws IoError.
  explicit ManifestWriter(const fs::path& path);
  void append(const std::string& line);
  [[nodiscard]] const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
  std::mutex mutex_;
  std::ofstream out_;
};

/// Writes `distorted` to out_root/<image_dir>/<id><image_ext> and the clean
/// labels beside it, then appends `record` with status "exported". Throws
/// GateViolation unless record.psnr > retention_threshold, and IoError (before
/// touching the manifest) when the files cannot be written.
fs::path export_adversarial(const DatasetEntry& entry, const Image& distorted, const LabelMap& labels,
                            ManifestRecord record, const fs::path& out_root, const DatasetLayout& layout,
                            ManifestWriter& manifest, double retention_threshold = 20.0);

// Synthetic scenes for desk-scale corpora.
struct SceneRegion {
  enum class Kind { Rect, RowStripes, ColumnStripes };
  Kind kind = Kind::Rect;
  std::uint16_t label = 0;
  /// Higher wins where regions overlap.
  int priority = 0;
  // Rect bounds, also the extent that stripes are confined to.
  std::uint32_t y0 = 0, x0 = 0, height = 0, width = 0;
  /// Stripes: rows (or columns) with (coord - start) mod period < thickness.
  std::uint32_t period = 0, thickness = 0;
};

struct SceneSpec {
  std::uint32_t height = 64;
  std::uint32_t width = 64;
  std::uint16_t background = 0;
  std::vector<SceneRegion> regions;
  /// Per-sample uniform colour noise in [-jitter, jitter].
  std::uint32_t jitter = 0;
};

struct Scene {
  Image image;
  LabelMap labels;
};

/// Colours come from `palette`, so the palette oracle reproduces the labels
/// exactly. Throws InvalidSpec on same-priority overlaps with different
/// labels, unknown classes, empty regions, or jitter large enough to cross a
/// decision boundary.
Scene synth_scene(const SceneSpec& spec, std::uint64_t seed,
                  const PaletteSegmenter& palette = PaletteSegmenter::builtin());

/// A random spec of 2-6 regions over the palette classes.
SceneSpec random_scene_spec(std::uint32_t height, std::uint32_t width, std::uint64_t seed,
                            const PaletteSegmenter& palette = PaletteSegmenter::builtin());

}  // namespace segrmt
