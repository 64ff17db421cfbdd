#include "segrmt/campaign.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "segrmt/error.hpp"
#include "segrmt/random.hpp"
#include "segrmt/remote.hpp"
#include "segrmt/transforms.hpp"

namespace segrmt {

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void config_require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

void write_trace(const fs::path& path, const EvolutionTrace& trace) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "generation,best_fitness,mean_fitness,oracle_calls\n";
  for (const auto& g : trace.generations)
    out << g.generation << ',' << format_double(g.best_fitness) << ',' << format_double(g.mean_fitness) << ','
        << g.oracle_calls << '\n';
}

struct EntryOutcome {
  ManifestRecord record;
  Image distorted;
  LabelMap labels;
  EvolutionTrace trace;
  bool ran = false;
};

EntryOutcome attack_entry(const DatasetEntry& entry, const CampaignConfig& cfg, const SegmentationOracle& oracle) {
  EntryOutcome out;
  auto& rec = out.record;
  rec.id = entry.id;
  rec.seed = entry_seed(cfg.ga.master_seed, entry.id);
  try {
    auto loaded = load_entry(entry);
    LabelMap clean;
    try {
      clean = oracle.segment(loaded.image);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OracleFailure) throw;
      throw Error(ErrorCode::OracleFailure, e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::OracleFailure, e.what());
    }
    rec.clean_iou = iou(clean, loaded.labels).mean_iou;

    GaConfig ga = cfg.ga;
    ga.master_seed = rec.seed;
    std::optional<std::chrono::duration<double>> budget;
    if (cfg.per_image_time_budget) budget = std::chrono::duration<double>(*cfg.per_image_time_budget);
    auto result = evolve(loaded.image, loaded.labels, oracle, ga, cfg.genome, budget);

    rec.chromosome_hex = to_hex(encode(result.best));
    rec.fitness = result.best_record.fitness;
    rec.iou = result.best_record.iou;
    rec.psnr = result.best_record.psnr;
    rec.generations = result.trace.generations.size();
    rec.termination = std::string(to_string(result.trace.termination));
    rec.oracle_calls = result.trace.oracle_calls;
    out.distorted = apply_sequence(loaded.image, to_transform_sequence(result.best));
    out.labels = std::move(loaded.labels);
    out.trace = std::move(result.trace);
    out.ran = true;
    rec.status = rec.psnr > cfg.retention_threshold && rec.iou ? "exported" : "discarded";
  } catch (const EvolutionAborted& e) {
    rec.status = "failed";
    rec.error = e.what();
    rec.generations = e.partial_trace().generations.size();
  } catch (const std::exception& e) {
    rec.status = "failed";
    rec.error = e.what();
  }
  return out;
}

}  // namespace

std::uint64_t entry_seed(std::uint64_t master_seed, const std::string& id) {
  return counter_hash(master_seed, fnv1a64(id));
}

void CampaignConfig::check() const {
  config_require(!dataset_root.empty(), "dataset root is required");
  config_require(!output_root.empty(), "output root is required");
  std::error_code ec;
  config_require(fs::is_directory(dataset_root, ec), "dataset root " + dataset_root.string() + " does not exist");
  config_require(parallel_workers >= 1, "parallel_workers must be >= 1");
  config_require(!per_image_time_budget || *per_image_time_budget > 0.0, "time_budget must be positive");
  config_require(oracle_timeout_ms > 0, "oracle_timeout_ms must be positive");
  try {
    ga.check();
    genome.check();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.detail());
  }
}

KeyValueFile CampaignConfig::to_keys() const {
  KeyValueFile kv;
  if (!dataset_root.empty()) kv.set("dataset", dataset_root.string());
  if (!output_root.empty()) kv.set("output", output_root.string());
  kv.set("oracle", oracle);
  kv.set("oracle_timeout_ms", std::to_string(oracle_timeout_ms));
  kv.set("parallel_workers", std::to_string(parallel_workers));
  if (per_image_time_budget) kv.set("time_budget", format_double(*per_image_time_budget));
  kv.set("retention_threshold", format_double(retention_threshold));
  for (const auto& [k, v] : layout.to_keys().entries()) kv.set("layout." + k, v);
  for (const auto& [k, v] : ga.to_keys().entries()) kv.set("ga." + k, v);
  kv.set("genome.min_genes", std::to_string(genome.min_genes));
  kv.set("genome.max_genes", std::to_string(genome.max_genes));
  kv.set("genome.activation_probability", format_double(genome.activation_probability));
  for (auto kind : kAllDistortionKinds)
    kv.set("genome.weight." + std::string(to_string(kind)),
           format_double(genome.kind_weights[static_cast<std::size_t>(kind)]));
  for (const auto& [k, v] : KeyValueFile::parse(genome.bounds.to_text()).entries()) kv.set("bounds." + k, v);
  return kv;
}

void CampaignConfig::apply_keys(const KeyValueFile& kv) {
  constexpr auto code = ErrorCode::ConfigError;
  KeyValueFile layout_kv = layout.to_keys();
  KeyValueFile ga_kv = ga.to_keys();
  KeyValueFile bounds_kv = KeyValueFile::parse(genome.bounds.to_text());
  bool bounds_touched = false;
  for (const auto& [k, v] : kv.entries()) {
    if (k == "dataset") dataset_root = v;
    else if (k == "output") output_root = v;
    else if (k == "oracle") oracle = v;
    else if (k == "oracle_timeout_ms") oracle_timeout_ms = static_cast<std::uint32_t>(parse_u64(k, v, code));
    else if (k == "parallel_workers") parallel_workers = parse_u64(k, v, code);
    else if (k == "time_budget") per_image_time_budget = parse_double(k, v, code);
    else if (k == "retention_threshold") retention_threshold = parse_double(k, v, code);
    else if (k.starts_with("layout.")) layout_kv.set(k.substr(7), v);
    else if (k.starts_with("ga.")) ga_kv.set(k.substr(3), v);
    else if (k == "genome.min_genes") genome.min_genes = parse_u64(k, v, code);
    else if (k == "genome.max_genes") genome.max_genes = parse_u64(k, v, code);
    else if (k == "genome.activation_probability") genome.activation_probability = parse_double(k, v, code);
    else if (k.starts_with("genome.weight.")) {
      const auto kind = parse_distortion_kind(k.substr(14));
      if (!kind) throw Error(code, "unknown distortion kind in '" + k + "'");
      genome.kind_weights[static_cast<std::size_t>(*kind)] = parse_double(k, v, code);
    } else if (k.starts_with("bounds.")) {
      bounds_kv.set(k.substr(7), v);
      bounds_touched = true;
    } else {
      throw Error(code, "unknown config key '" + k + "'");
    }
  }
  try {
    layout = DatasetLayout::from_keys(layout_kv);
    ga = GaConfig::from_keys(ga_kv);
    if (bounds_touched) genome.bounds = ParameterBounds::from_text(bounds_kv.to_text());
  } catch (const Error& e) {
    throw Error(code, e.detail());
  }
}

AttackSummary cmd_attack(const CampaignConfig& cfg, std::ostream* log) {
  cfg.check();
  const auto index = load_dataset(cfg.dataset_root, cfg.layout);

  RemoteOptions options;
  options.timeout = std::chrono::milliseconds(cfg.oracle_timeout_ms);
  options.max_connections = cfg.parallel_workers;
  const auto oracle = make_oracle(cfg.oracle, options);

  AttackSummary summary;
  summary.manifest_path = cfg.output_root / "manifest.jsonl";
  ManifestWriter manifest(summary.manifest_path);

  ManifestHeader header;
  header.tool_version = kToolVersion;
  header.master_seed = cfg.ga.master_seed;
  header.ga_config = cfg.ga.to_keys();
  header.parameter_bounds = cfg.genome.bounds.to_text();
  header.oracle = oracle->descriptor();
  header.rng_algorithm = std::string(kRngAlgorithm);
  header.retention_threshold = cfg.retention_threshold;
  header.repeat = cfg.repeat;
  header.started_at = utc_now();
  manifest.append(manifest_line(header));

  const auto count = static_cast<std::int64_t>(index.entries.size());
  summary.records.resize(index.entries.size());
  std::exception_ptr fatal;

#pragma omp parallel for ordered schedule(dynamic, 1) num_threads(static_cast<int>(cfg.parallel_workers))
  for (std::int64_t i = 0; i < count; ++i) {
    const auto& entry = index.entries[static_cast<std::size_t>(i)];
    auto outcome = attack_entry(entry, cfg, *oracle);
#pragma omp ordered
    {
      auto& rec = outcome.record;
      try {
        if (outcome.ran) write_trace(cfg.output_root / "traces" / (entry.id + ".csv"), outcome.trace);
        if (rec.status == "exported") {
          export_adversarial(entry, outcome.distorted, outcome.labels, rec, cfg.output_root, cfg.layout, manifest,
                             cfg.retention_threshold);
          rec.output = (fs::path(cfg.layout.image_dir) / (entry.id + cfg.layout.image_ext)).generic_string();
        } else {
          manifest.append(manifest_line(rec));
        }
      } catch (const Error& e) {
        rec.status = "failed";
        rec.error = e.what();
        try {
          manifest.append(manifest_line(rec));
        } catch (...) {
          if (!fatal) fatal = std::current_exception();
        }
      }
      if (log) {
        *log << entry.id << ": " << rec.status;
        if (rec.status == "failed") *log << " (" << rec.error << ")";
        else *log << " iou=" << format_double(rec.iou.value_or(-1)) << " psnr=" << format_double(rec.psnr);
        *log << '\n';
      }
      summary.records[static_cast<std::size_t>(i)] = std::move(rec);
    }
  }
  if (fatal) std::rethrow_exception(fatal);

  ManifestFooter footer;
  double clean_sum = 0.0, adv_sum = 0.0, psnr_sum = 0.0;
  std::size_t ok = 0;
  for (const auto& rec : summary.records) {
    if (rec.status == "failed") {
      summary.failures.push_back(rec.id + ": " + rec.error);
      continue;
    }
    ++ok;
    clean_sum += *rec.clean_iou;
    if (rec.status == "exported") {
      ++summary.exported;
      adv_sum += *rec.iou;
      psnr_sum += rec.psnr;
    } else {
      ++summary.discarded;
      adv_sum += *rec.clean_iou;
    }
  }
  if (ok) {
    summary.clean_miou = clean_sum / static_cast<double>(ok);
    summary.adversarial_miou = adv_sum / static_cast<double>(ok);
  }
  if (summary.exported) summary.mean_psnr = psnr_sum / static_cast<double>(summary.exported);
  footer.exported = summary.exported;
  footer.discarded = summary.discarded;
  footer.failed = summary.failures.size();
  footer.finished_at = utc_now();
  manifest.append(manifest_line(footer));
  return summary;
}

EvaluationTable cmd_evaluate(const fs::path& dataset_root, const DatasetLayout& layout,
                             const SegmentationOracle& oracle) {
  const auto index = load_dataset(dataset_root, layout);
  EvaluationTable table;
  table.rows.resize(index.entries.size());
  std::vector<std::pair<LabelMap, LabelMap>> pairs(index.entries.size());
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    auto loaded = load_entry(index.entries[i]);
    auto predicted = oracle.segment(loaded.image);
    const auto report = iou(predicted, loaded.labels);
    table.rows[i] = {index.entries[i].id, report.mean_iou, report.per_class};
    pairs[i] = {std::move(predicted), std::move(loaded.labels)};
  }
  if (!pairs.empty()) table.aggregate = mean_iou_over_set(pairs);
  return table;
}

void write_iou_table(std::ostream& out, const EvaluationTable& table) {
  std::set<std::uint16_t> classes;
  for (const auto& row : table.rows)
    for (const auto& [c, _] : row.per_class) classes.insert(c);
  out << "id,mean_iou";
  for (auto c : classes) out << ",class_" << c;
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.id << ',' << format_double(row.mean_iou);
    for (auto c : classes) {
      out << ',';
      if (const auto it = row.per_class.find(c); it != row.per_class.end()) out << format_double(it->second);
    }
    out << '\n';
  }
}

EvaluationTable read_iou_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("id,mean_iou"))
    throw Error(ErrorCode::DecodeError, path.string() + ": expected header starting with id,mean_iou");
  EvaluationTable table;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    if (c1 == std::string::npos) throw Error(ErrorCode::DecodeError, path.string() + " line " + std::to_string(number));
    const auto c2 = line.find(',', c1 + 1);
    IoURow row;
    row.id = line.substr(0, c1);
    row.mean_iou = parse_double("mean_iou", line.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1),
                                ErrorCode::DecodeError);
    table.rows.push_back(std::move(row));
  }
  double sum = 0.0;
  for (const auto& r : table.rows) sum += r.mean_iou;
  if (!table.rows.empty()) table.aggregate = sum / static_cast<double>(table.rows.size());
  return table;
}

StatsReport cmd_stats(const std::string& label_a, const EvaluationTable& a,
                      const std::vector<std::pair<std::string, EvaluationTable>>& bs, stats::ModePolicy policy) {
  std::map<std::string, double> by_id_a;
  for (const auto& r : a.rows) by_id_a[r.id] = r.mean_iou;

  StatsReport report;
  auto add_violin = [&](const std::string& method, const EvaluationTable& t) {
    std::vector<double> values;
    for (const auto& r : t.rows) {
      report.violin.push_back({method, r.id, r.mean_iou});
      values.push_back(r.mean_iou);
    }
    if (!values.empty()) report.summaries[method] = stats::summarize_distribution(values);
  };
  add_violin(label_a, a);

  std::vector<double> group_a, group_b;
  for (const auto& r : a.rows) group_a.push_back(r.mean_iou);
  for (const auto& [label_b, b] : bs) {
    std::map<std::string, double> by_id_b;
    for (const auto& r : b.rows) by_id_b[r.id] = r.mean_iou;
    std::vector<std::string> only;
    for (const auto& [id, _] : by_id_a)
      if (!by_id_b.count(id)) only.push_back(id + " (only in " + label_a + ")");
    for (const auto& [id, _] : by_id_b)
      if (!by_id_a.count(id)) only.push_back(id + " (only in " + label_b + ")");
    if (!only.empty()) {
      std::string msg = label_a + " vs " + label_b + ":";
      for (const auto& s : only) msg += " " + s;
      throw Error(ErrorCode::IdMismatch, msg);
    }
    stats::PairedSamples s;
    s.label_a = label_a;
    s.label_b = label_b;
    for (const auto& [id, v] : by_id_a) {
      s.a.push_back(v);
      s.b.push_back(by_id_b.at(id));
    }
    stats::Comparison cmp{label_a, label_b, std::nullopt, ""};
    try {
      cmp.wilcoxon = stats::wilcoxon_signed_rank(s, policy);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllZeroDifferences) throw;
      cmp.note = "warning: all paired differences are zero";
    }
    report.comparisons.push_back(std::move(cmp));
    for (const auto& r : b.rows) group_b.push_back(r.mean_iou);
    add_violin(label_b, b);
  }

  report.cohens_d_note = "group b pools the per-image scores of every comparison method";
  if (!bs.empty()) {
    try {
      report.cohens_d = stats::cohens_d(group_a, group_b);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateVariance && e.code() != ErrorCode::TooFewSamples) throw;
      if (e.code() == ErrorCode::DegenerateVariance &&
          stats::summarize_distribution(group_a).mean == stats::summarize_distribution(group_b).mean) {
        report.cohens_d = stats::CohensDResult{};
        report.cohens_d->mean_a = report.cohens_d->mean_b = stats::summarize_distribution(group_a).mean;
        report.cohens_d_note += "; zero pooled spread with equal means, d reported as 0";
      } else {
        report.cohens_d_note += "; d unavailable: " + e.detail();
      }
    }
  }
  return report;
}

void write_stats_report(const fs::path& dir, const StatsReport& report) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("stats.csv");
    stats::write_comparison_csv(out, report.comparisons);
  }
  {
    auto out = open("violin.csv");
    stats::write_violin_csv(out, report.violin);
  }
  nlohmann::ordered_json j;
  j["quantile_method"] = stats::kQuantileMethod;
  j["zero_differences"] = "dropped before ranking";
  j["p_values"] = "two-sided";
  auto& comparisons = j["comparisons"] = nlohmann::ordered_json::array();
  for (const auto& c : report.comparisons) {
    nlohmann::ordered_json row;
    row["method_a"] = c.method_a;
    row["method_b"] = c.method_b;
    if (c.wilcoxon) {
      row["statistic"] = c.wilcoxon->statistic;
      row["p_value"] = c.wilcoxon->p_value;
      row["mode"] = std::string(stats::to_string(c.wilcoxon->mode));
      row["n_effective"] = c.wilcoxon->n_effective;
    } else {
      row["statistic"] = nullptr;
      row["p_value"] = nullptr;
      row["mode"] = nullptr;
      row["n_effective"] = 0;
    }
    row["note"] = c.note;
    comparisons.push_back(row);
  }
  if (report.cohens_d) {
    const auto& d = *report.cohens_d;
    j["cohens_d"] = {{"d", d.d},           {"mean_a", d.mean_a}, {"mean_b", d.mean_b},
                     {"sd_a", d.sd_a},     {"sd_b", d.sd_b},     {"pooled_sd", d.pooled_sd}};
  } else {
    j["cohens_d"] = nullptr;
  }
  j["cohens_d_note"] = report.cohens_d_note;
  auto& summaries = j["summaries"] = nlohmann::ordered_json::object();
  for (const auto& [method, s] : report.summaries)
    summaries[method] = {{"count", s.count}, {"min", s.min},       {"q1", s.q1},   {"median", s.median},
                         {"q3", s.q3},       {"max", s.max},       {"mean", s.mean}, {"sd", s.sd}};
  auto out = open("report.json");
  out << j.dump(2) << '\n';
}

ReplayReport cmd_replay(const fs::path& manifest_path, const fs::path& dataset_root, const DatasetLayout& layout,
                        const SegmentationOracle* oracle) {
  const auto manifest = read_manifest(manifest_path);
  const auto index = load_dataset(dataset_root, layout);
  const fs::path out_root = manifest_path.parent_path();
  std::map<std::string, const DatasetEntry*> by_id;
  for (const auto& e : index.entries) by_id[e.id] = &e;

  ReplayReport report;
  for (const auto& rec : manifest.records) {
    if (rec.status != "exported") continue;
    ++report.checked;
    auto drift = [&](const std::string& reason) { report.drifts.push_back({rec.id, reason}); };
    try {
      const auto it = by_id.find(rec.id);
      if (it == by_id.end()) {
        drift("source entry not in dataset");
        continue;
      }
      const auto chromosome = decode(from_hex(rec.chromosome_hex));
      const auto loaded = load_entry(*it->second);
      const auto replayed = apply_sequence(loaded.image, to_transform_sequence(chromosome));
      const auto exported_bytes = [&] {
        std::ifstream in(out_root / rec.output, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoError, "cannot read " + (out_root / rec.output).string());
        return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
      }();
      if (exported_bytes != encode_netpbm(replayed)) drift("exported file differs from the replayed image");
      const double p = psnr(loaded.image, replayed);
      if (p != rec.psnr) drift("psnr " + format_double(p) + " != recorded " + format_double(rec.psnr));
      if (!(p > manifest.header.retention_threshold)) drift("psnr " + format_double(p) + " fails the retention gate");
      if (oracle) {
        const double v = iou(oracle->segment(replayed), loaded.labels).mean_iou;
        if (!rec.iou || v != *rec.iou) drift("iou " + format_double(v) + " != recorded value");
      }
    } catch (const Error& e) {
      drift(e.what());
    }
  }
  return report;
}

void cmd_synth(const fs::path& root, std::size_t count, std::uint32_t height, std::uint32_t width,
               std::uint64_t seed, const DatasetLayout& layout) {
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03zu", i);
    const auto scene_seed = counter_hash(seed, i);
    const auto scene = synth_scene(random_scene_spec(height, width, scene_seed), scene_seed);
    write_image(root / layout.image_dir / (id + layout.image_ext), scene.image);
    write_labels(root / layout.label_dir / (id + layout.label_ext), scene.labels);
  }
}

}  // namespace segrmt
