#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segrmt/error.hpp"
#include "segrmt/genome.hpp"
#include "segrmt/imaging.hpp"
#include "segrmt/kvfile.hpp"
#include "segrmt/oracle.hpp"
#include "segrmt/random.hpp"

namespace segrmt {

struct MutationSubrates {
  double structural = 0.3;
  double kind_change = 0.3;
  double param_perturb = 0.4;
  friend bool operator==(const MutationSubrates&, const MutationSubrates&) = default;
};

struct GaConfig {
  std::size_t population_size = 50;
  std::size_t max_generations = 100;
  double crossover_rate = 0.8;
  double mutation_rate = 0.2;
  MutationSubrates mutation_subrates;
  std::size_t tournament_size = 3;
  std::size_t elite_count = 2;
  /// Relative best-fitness improvement below this counts as a stagnant generation.
  double stagnation_epsilon = 0.001;
  std::size_t stagnation_window = 15;
  double psnr_threshold = 20.0;
  /// Cap on PSNR / psnr_threshold; 2.5 corresponds to 50 dB at the default threshold.
  double psnr_factor_ceiling = 2.5;
  std::uint64_t master_seed = 0;

  /// Throws InvalidConfig.
  void check() const;

  /// Keys mirror the field names; subrates are `mutation_subrates.structural` etc.
  [[nodiscard]] KeyValueFile to_keys() const;
  /// Unknown keys throw InvalidConfig; missing keys keep their defaults.
  static GaConfig from_keys(const KeyValueFile& kv);
  static GaConfig load(const std::filesystem::path& path);

  friend bool operator==(const GaConfig&, const GaConfig&) = default;
};

struct FitnessRecord {
  double fitness = 0.0;
  /// Absent when the PSNR gate rejected the candidate before the oracle was consulted.
  std::optional<double> iou;
  double psnr = 0.0;
  std::size_t generation = 0;
};

/// (1 − iou) · min(psnr / threshold, ceiling), or 0 when psnr < threshold.
double fitness_from_metrics(double iou, double psnr, const GaConfig& cfg);

/// Applies `ch` to `original`, gates on PSNR and, above the gate, scores the
/// oracle's segmentation of the distorted image against `truth`.
FitnessRecord fitness(const Image& original, const LabelMap& truth, const Chromosome& ch,
                      const SegmentationOracle& oracle, const GaConfig& cfg);

/// Index of the winner of a size-`k` tournament over `fitness`: k distinct
/// individuals drawn uniformly, highest fitness wins, ties to the lowest index.
std::size_t tournament_select(std::span<const double> fitness, std::size_t k, Rng& rng);

struct CutPoints {
  std::size_t first = 0;
  std::size_t second = 0;
};

/// Exchanges a[cuts_a.first, cuts_a.second) with b[cuts_b.first, cuts_b.second).
/// Children longer than max_genes lose tail genes; a child shorter than
/// min_genes is replaced by a copy of the fitter parent.
std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b, CutPoints cuts_a,
                                               CutPoints cuts_b, const GenomeConfig& genome,
                                               bool a_is_fitter);

/// crossover_at with cut points drawn uniformly on gene boundaries.
std::pair<Chromosome, Chromosome> crossover_two_point(const Chromosome& a, const Chromosome& b, Rng& rng,
                                                      const GenomeConfig& genome, bool a_is_fitter);

enum class MutationLevel { Structural, KindChange, ParamPerturb };

struct MutationResult {
  Chromosome chromosome;
  /// Absent when no mutation happened.
  std::optional<MutationLevel> level;
};

/// With probability mutation_rate applies one level chosen by the subrates:
/// insert/delete a gene, change a gene's kind, or nudge one parameter (which
/// includes flipping the activation bit and toggling an affected region).
MutationResult mutate_traced(const Chromosome& ch, const GaConfig& cfg, const GenomeConfig& genome, Rng& rng);
Chromosome mutate(const Chromosome& ch, const GaConfig& cfg, const GenomeConfig& genome, Rng& rng);

enum class TerminationReason { MaxGenerations, Stagnation, TimeBudget };
std::string_view to_string(TerminationReason reason) noexcept;

struct GenerationStats {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::size_t oracle_calls = 0;
};

struct EvolutionTrace {
  std::vector<GenerationStats> generations;
  Chromosome best;
  FitnessRecord best_record;
  TerminationReason termination = TerminationReason::MaxGenerations;
  std::size_t oracle_calls = 0;
};

struct EvolveResult {
  Chromosome best;
  FitnessRecord best_record;
  EvolutionTrace trace;
};

/// Thrown when the oracle fails mid-run; carries everything evaluated so far.
class EvolutionAborted : public Error {
 public:
  EvolutionAborted(const std::string& message, EvolutionTrace partial)
      : Error(ErrorCode::OracleFailure, message), partial_(std::move(partial)) {}
  [[nodiscard]] const EvolutionTrace& partial_trace() const noexcept { return partial_; }

 private:
  EvolutionTrace partial_;
};

/// Runs the genetic algorithm for one image. `genome.target_shape` is taken
/// from `original`. Deterministic for a fixed cfg.master_seed and a
/// deterministic oracle, regardless of the OpenMP thread count.
EvolveResult evolve(const Image& original, const LabelMap& truth, const SegmentationOracle& oracle,
                    const GaConfig& cfg, GenomeConfig genome,
                    std::optional<std::chrono::duration<double>> time_budget = std::nullopt);

}  // namespace segrmt
