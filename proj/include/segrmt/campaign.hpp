#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "segrmt/dataset.hpp"
#include "segrmt/evolution.hpp"
#include "segrmt/genome.hpp"
#include "segrmt/stats.hpp"

namespace segrmt {

inline constexpr const char* kToolVersion = "segrmt 0.1.0";

struct CampaignConfig {
  fs::path dataset_root;
  DatasetLayout layout;
  /// `builtin-palette` or an endpoint (exec:, tcp:, unix:).
  std::string oracle = "builtin-palette";
  std::uint32_t oracle_timeout_ms = 30'000;
  GaConfig ga;
  GenomeConfig genome;
  fs::path output_root;
  std::size_t parallel_workers = 1;
  std::optional<double> per_image_time_budget;
  /// Exported images need PSNR strictly above this.
  double retention_threshold = 20.0;
  /// Recorded in the manifest; set by the repeat loop.
  std::size_t repeat = 0;

  /// Throws ConfigError.
  void check() const;

  /// Flat keys: dataset, output, oracle, oracle_timeout_ms, parallel_workers,
  /// time_budget, retention_threshold, layout.*, ga.*, genome.*, bounds.*.
  [[nodiscard]] KeyValueFile to_keys() const;
  /// Overrides the fields named in `kv`. Unknown keys throw ConfigError.
  void apply_keys(const KeyValueFile& kv);
};

/// Independent per-entry stream: hash(master_seed, id).
std::uint64_t entry_seed(std::uint64_t master_seed, const std::string& id);

struct AttackSummary {
  fs::path manifest_path;
  std::vector<ManifestRecord> records;
  double clean_miou = 0.0;
  /// Exported entries use their adversarial IoU, discarded ones their clean IoU.
  double adversarial_miou = 0.0;
  double mean_psnr = 0.0;
  std::size_t exported = 0;
  std::size_t discarded = 0;
  std::vector<std::string> failures;

  /// 0 when every entry succeeded, 2 otherwise.
  [[nodiscard]] int exit_code() const noexcept { return failures.empty() ? 0 : 2; }
};

/// Runs one GA per dataset entry and exports the survivors. Per-entry failures
/// are recorded; configuration problems throw.
AttackSummary cmd_attack(const CampaignConfig& cfg, std::ostream* log = nullptr);

struct IoURow {
  std::string id;
  double mean_iou = 0.0;
  std::map<std::uint16_t, double> per_class;
};

struct EvaluationTable {
  std::vector<IoURow> rows;
  double aggregate = 0.0;
};

EvaluationTable cmd_evaluate(const fs::path& dataset_root, const DatasetLayout& layout,
                             const SegmentationOracle& oracle);

/// `id,mean_iou,class_<k>...`; absent classes are left empty.
void write_iou_table(std::ostream& out, const EvaluationTable& table);
/// Reads the id and mean_iou columns. Throws DecodeError.
EvaluationTable read_iou_table(const fs::path& path);

struct StatsReport {
  std::vector<stats::Comparison> comparisons;
  /// Group A against every group B concatenated.
  std::optional<stats::CohensDResult> cohens_d;
  std::string cohens_d_note;
  std::map<std::string, stats::Summary> summaries;
  std::vector<stats::ViolinRow> violin;
};

/// Compares table `a` with each of `bs` by id. Throws IdMismatch listing the
/// symmetric difference of id sets.
StatsReport cmd_stats(const std::string& label_a, const EvaluationTable& a,
                      const std::vector<std::pair<std::string, EvaluationTable>>& bs,
                      stats::ModePolicy policy = stats::ModePolicy::Auto);

/// stats.csv, violin.csv and report.json under `dir`.
void write_stats_report(const fs::path& dir, const StatsReport& report);

struct Drift {
  std::string id;
  std::string reason;
};

struct ReplayReport {
  std::size_t checked = 0;
  std::vector<Drift> drifts;
};

/// Re-applies every exported chromosome to its clean source and compares with
/// the exported file, the recorded PSNR and (given an oracle) the recorded IoU.
ReplayReport cmd_replay(const fs::path& manifest_path, const fs::path& dataset_root, const DatasetLayout& layout,
                        const SegmentationOracle* oracle = nullptr);

/// Writes `count` random scenes as `scene_000` ... under `root`.
void cmd_synth(const fs::path& root, std::size_t count, std::uint32_t height, std::uint32_t width,
               std::uint64_t seed, const DatasetLayout& layout = {});

}  // namespace segrmt
