#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "segrmt/campaign.hpp"
#include "segrmt/error.hpp"
#include "segrmt/remote.hpp"

namespace {

using namespace segrmt;

int exit_for(const Error& e) {
  std::cerr << "segrmt: " << e.what() << '\n';
  return 1;
}

struct Flags {
  KeyValueFile kv;
  std::string config;

  void add(CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(flag, [this, key](const std::string& v) { kv.set(key, v); }, help);
  }
};

CampaignConfig resolve(const Flags& flags) {
  CampaignConfig cfg;
  cfg.apply_keys(flags.kv);
  if (!flags.config.empty()) cfg.apply_keys(KeyValueFile::load(flags.config, ErrorCode::ConfigError));
  return cfg;
}

stats::ModePolicy parse_mode(const std::string& s) {
  if (s == "auto") return stats::ModePolicy::Auto;
  if (s == "exact") return stats::ModePolicy::Exact;
  if (s == "normal") return stats::ModePolicy::Normal;
  throw Error(ErrorCode::ConfigError, "unknown mode '" + s + "'");
}

std::pair<std::string, std::string> split_labelled(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) return {fs::path(s).stem().string(), s};
  return {s.substr(0, eq), s.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolves fidelity-preserving image distortions that break segmentation models."};
  app.require_subcommand(1);
  app.footer(
      "Configuration precedence: config file > command-line flags > defaults.\n"
      "Exit codes: 0 success, 1 configuration error, 2 partial failure or drift.");

  // attack
  Flags attack_flags;
  std::size_t repeat = 1;
  std::uint64_t seed_stride = 1;
  auto* attack = app.add_subcommand("attack", "Run one GA per dataset image and export the adversarial set");
  attack->add_option("--config", attack_flags.config, "Key-value config file (overrides flags)");
  attack_flags.add(attack, "--dataset", "dataset", "Dataset root");
  attack_flags.add(attack, "--output", "output", "Output root");
  attack_flags.add(attack, "--oracle", "oracle", "builtin-palette, exec:CMD, tcp:HOST:PORT or unix:PATH");
  attack_flags.add(attack, "--oracle-timeout-ms", "oracle_timeout_ms", "Per-request oracle timeout");
  attack_flags.add(attack, "--seed", "ga.master_seed", "Master seed");
  attack_flags.add(attack, "--workers", "parallel_workers", "Entries processed concurrently");
  attack_flags.add(attack, "--population", "ga.population_size", "Population size");
  attack_flags.add(attack, "--generations", "ga.max_generations", "Generation limit");
  attack_flags.add(attack, "--time-budget", "time_budget", "Per-image time budget in seconds");
  attack_flags.add(attack, "--retention-threshold", "retention_threshold", "Exported PSNR must exceed this");
  attack_flags.add(attack, "--psnr-threshold", "ga.psnr_threshold", "Fitness PSNR gate");
  std::string attack_bounds, attack_layout;
  attack->add_option("--bounds", attack_bounds, "Parameter bounds file");
  attack->add_option("--layout", attack_layout, "Dataset layout file");
  attack->add_option("--repeat", repeat, "Independent repetitions")->check(CLI::PositiveNumber);
  attack->add_option("--seed-stride", seed_stride, "Seed increment between repetitions");

  // evaluate
  std::string eval_dataset, eval_oracle = "builtin-palette", eval_layout, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Per-image IoU table of an oracle over a dataset");
  evaluate->add_option("--dataset", eval_dataset, "Dataset root")->required();
  evaluate->add_option("--oracle", eval_oracle, "Oracle spec");
  evaluate->add_option("--layout", eval_layout, "Dataset layout file");
  evaluate->add_option("--out", eval_out, "CSV output (stdout when absent)");

  // stats
  std::string stats_a, stats_out, stats_mode = "auto";
  std::vector<std::string> stats_b;
  auto* stats_cmd = app.add_subcommand("stats", "Wilcoxon signed-rank and Cohen's d over IoU tables");
  stats_cmd->add_option("--a", stats_a, "Table for the tool, as LABEL=PATH or PATH")->required();
  stats_cmd->add_option("--b", stats_b, "Comparison tables, LABEL=PATH or PATH")->required();
  stats_cmd->add_option("--out", stats_out, "Report directory")->required();
  stats_cmd->add_option("--mode", stats_mode, "auto, exact or normal");

  // replay
  std::string replay_manifest, replay_dataset, replay_oracle, replay_layout;
  auto* replay = app.add_subcommand("replay", "Re-apply a manifest and check for drift");
  replay->add_option("--manifest", replay_manifest, "manifest.jsonl")->required();
  replay->add_option("--dataset", replay_dataset, "Clean dataset root")->required();
  replay->add_option("--oracle", replay_oracle, "Also re-check IoU against this oracle");
  replay->add_option("--layout", replay_layout, "Dataset layout file");

  // gen-config
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-config", "Print the default configuration");
  gen->add_option("--out", gen_out, "Write to this file instead of stdout");

  // synth
  std::string synth_out;
  std::size_t synth_count = 10;
  std::uint32_t synth_h = 64, synth_w = 64;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus that the builtin palette segments perfectly");
  synth->add_option("--out", synth_out, "Dataset root")->required();
  synth->add_option("--count", synth_count, "Number of scenes");
  synth->add_option("--height", synth_h, "Scene height");
  synth->add_option("--width", synth_w, "Scene width");
  synth->add_option("--seed", synth_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*attack) {
      if (!attack_bounds.empty()) {
        for (const auto& [k, v] : KeyValueFile::load(attack_bounds, ErrorCode::ConfigError).entries())
          attack_flags.kv.set("bounds." + k, v);
      }
      if (!attack_layout.empty()) {
        for (const auto& [k, v] : KeyValueFile::load(attack_layout, ErrorCode::ConfigError).entries())
          attack_flags.kv.set("layout." + k, v);
      }
      const auto base = resolve(attack_flags);
      int code = 0;
      for (std::size_t r = 0; r < repeat; ++r) {
        auto cfg = base;
        cfg.repeat = r;
        cfg.ga.master_seed = base.ga.master_seed + r * seed_stride;
        if (repeat > 1) cfg.output_root = base.output_root / ("repeat_" + std::to_string(r));
        const auto summary = cmd_attack(cfg, &std::cerr);
        std::cout << "manifest: " << summary.manifest_path.string() << '\n'
                  << "entries: " << summary.records.size() << " exported: " << summary.exported
                  << " discarded: " << summary.discarded << " failed: " << summary.failures.size() << '\n'
                  << "clean mIoU: " << format_double(summary.clean_miou) << '\n'
                  << "adversarial mIoU: " << format_double(summary.adversarial_miou) << '\n'
                  << "mean PSNR: " << format_double(summary.mean_psnr) << '\n';
        for (const auto& f : summary.failures) std::cout << "failed " << f << '\n';
        code = std::max(code, summary.exit_code());
      }
      return code;
    }
    if (*evaluate) {
      const auto layout = eval_layout.empty() ? DatasetLayout{} : DatasetLayout::load(eval_layout);
      const auto oracle = make_oracle(eval_oracle);
      const auto table = cmd_evaluate(eval_dataset, layout, *oracle);
      if (eval_out.empty()) {
        write_iou_table(std::cout, table);
      } else {
        std::ofstream out(eval_out);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + eval_out);
        write_iou_table(out, table);
      }
      std::cerr << "mean IoU over set: " << format_double(table.aggregate) << '\n';
      return 0;
    }
    if (*stats_cmd) {
      const auto [label_a, path_a] = split_labelled(stats_a);
      std::vector<std::pair<std::string, EvaluationTable>> bs;
      for (const auto& s : stats_b) {
        const auto [label, path] = split_labelled(s);
        bs.emplace_back(label, read_iou_table(path));
      }
      const auto report = cmd_stats(label_a, read_iou_table(path_a), bs, parse_mode(stats_mode));
      write_stats_report(stats_out, report);
      stats::write_comparison_csv(std::cout, report.comparisons);
      if (report.cohens_d) std::cout << "cohens_d: " << format_double(report.cohens_d->d) << '\n';
      return 0;
    }
    if (*replay) {
      const auto layout = replay_layout.empty() ? DatasetLayout{} : DatasetLayout::load(replay_layout);
      std::unique_ptr<SegmentationOracle> oracle;
      if (!replay_oracle.empty()) oracle = make_oracle(replay_oracle);
      const auto report = cmd_replay(replay_manifest, replay_dataset, layout, oracle.get());
      std::cout << "checked: " << report.checked << " drift: " << report.drifts.size() << '\n';
      for (const auto& d : report.drifts) std::cout << "DriftDetected " << d.id << ": " << d.reason << '\n';
      return report.drifts.empty() ? 0 : 2;
    }
    if (*gen) {
      const auto text = CampaignConfig{}.to_keys().to_text();
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(gen_out);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + gen_out);
        out << text;
      }
      return 0;
    }
    if (*synth) {
      cmd_synth(synth_out, synth_count, synth_h, synth_w, synth_seed);
      return 0;
    }
  } catch (const Error& e) {
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "segrmt: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
