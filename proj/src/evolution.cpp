#include "segrmt/evolution.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <unordered_map>

#include "segrmt/transforms.hpp"

namespace segrmt {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

bool is_probability(double v) { return v >= 0.0 && v <= 1.0; }

// Partner probability that shares the "sum ≤ 1" constraint with `which`.
std::optional<NumericParam> partner(NumericParam which) {
  switch (which) {
    case NumericParam::PMin: return NumericParam::PMax;
    case NumericParam::PMax: return NumericParam::PMin;
    case NumericParam::PSalt: return NumericParam::PPepper;
    case NumericParam::PPepper: return NumericParam::PSalt;
    default: return std::nullopt;
  }
}

// Axis-aligned block covering at most max_affected_fraction of the image.
std::vector<std::uint32_t> random_block(const GenomeConfig& genome, Rng& rng) {
  const auto& s = genome.target_shape;
  const auto limit = static_cast<std::int64_t>(
      std::floor(genome.bounds.max_affected_fraction() * static_cast<double>(s.pixels())));
  const std::int64_t bh = rng.uniform_int(1, std::max<std::int64_t>(1, std::min<std::int64_t>(s.height, limit)));
  const std::int64_t bw =
      rng.uniform_int(1, std::max<std::int64_t>(1, std::min<std::int64_t>(s.width, limit / bh)));
  const std::int64_t y0 = rng.uniform_int(0, s.height - bh);
  const std::int64_t x0 = rng.uniform_int(0, s.width - bw);
  std::vector<std::uint32_t> out;
  out.reserve(static_cast<std::size_t>(bh * bw));
  for (std::int64_t y = y0; y < y0 + bh; ++y)
    for (std::int64_t x = x0; x < x0 + bw; ++x) out.push_back(static_cast<std::uint32_t>(y * s.width + x));
  return out;
}

void perturb_parameter(SubTransform& gene, const GenomeConfig& genome, Rng& rng) {
  auto& p = gene.params;
  const auto numeric = bounded_params(p.kind);
  const bool has_index = p.kind == DistortionKind::LineColumnDropout;
  // Options: each bounded parameter, the line index, the activation bit, the affected region.
  const std::size_t options = numeric.size() + (has_index ? 1 : 0) + 2;
  const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(options) - 1));

  if (pick < numeric.size()) {
    const auto which = numeric[pick];
    const auto& iv = genome.bounds.interval(p.kind, which);
    const double step = rng.uniform(-0.1, 0.1) * iv.width();
    double value = std::clamp(get_param(p, which) + step, iv.lo, iv.hi);
    if (const auto other = partner(which)) value = std::min(value, 1.0 - get_param(p, *other));
    if (which == NumericParam::Stride)
      value = std::clamp(std::round(value), std::ceil(iv.lo), std::floor(iv.hi));
    set_param(p, which, value);
    return;
  }
  if (has_index && pick == numeric.size()) {
    const auto& s = genome.target_shape;
    const std::int64_t dim = p.orientation == Orientation::Row ? s.height : s.width;
    const double step = rng.uniform(-0.1, 0.1) * static_cast<double>(dim - 1);
    const auto moved = static_cast<std::int64_t>(std::llround(static_cast<double>(p.index) + step));
    p.index = static_cast<std::uint32_t>(std::clamp<std::int64_t>(moved, 0, dim - 1));
    return;
  }
  if (pick == options - 2) {
    gene.active = !gene.active;
    return;
  }
  if (p.affected_indices) {
    p.affected_indices.reset();
  } else {
    p.affected_indices = random_block(genome, rng);
  }
}

}  // namespace

void GaConfig::check() const {
  require(population_size >= 1, "population_size must be >= 1");
  require(max_generations >= 1, "max_generations must be >= 1");
  require(is_probability(crossover_rate), "crossover_rate must lie in [0,1]");
  require(is_probability(mutation_rate), "mutation_rate must lie in [0,1]");
  const auto& s = mutation_subrates;
  require(is_probability(s.structural) && is_probability(s.kind_change) && is_probability(s.param_perturb),
          "mutation subrates must lie in [0,1]");
  require(std::abs(s.structural + s.kind_change + s.param_perturb - 1.0) < 1e-9,
          "mutation subrates must sum to 1");
  require(tournament_size >= 1 && tournament_size <= population_size,
          "tournament_size must lie in [1, population_size]");
  require(elite_count < population_size, "elite_count must be below population_size");
  require(stagnation_epsilon >= 0.0, "stagnation_epsilon must be >= 0");
  require(stagnation_window >= 1, "stagnation_window must be >= 1");
  require(std::isfinite(psnr_threshold) && psnr_threshold > 0.0, "psnr_threshold must be positive");
  require(psnr_factor_ceiling > 0.0, "psnr_factor_ceiling must be positive");
}

KeyValueFile GaConfig::to_keys() const {
  KeyValueFile kv;
  kv.set("population_size", std::to_string(population_size));
  kv.set("max_generations", std::to_string(max_generations));
  kv.set("crossover_rate", format_double(crossover_rate));
  kv.set("mutation_rate", format_double(mutation_rate));
  kv.set("mutation_subrates.structural", format_double(mutation_subrates.structural));
  kv.set("mutation_subrates.kind_change", format_double(mutation_subrates.kind_change));
  kv.set("mutation_subrates.param_perturb", format_double(mutation_subrates.param_perturb));
  kv.set("tournament_size", std::to_string(tournament_size));
  kv.set("elite_count", std::to_string(elite_count));
  kv.set("stagnation_epsilon", format_double(stagnation_epsilon));
  kv.set("stagnation_window", std::to_string(stagnation_window));
  kv.set("psnr_threshold", format_double(psnr_threshold));
  kv.set("psnr_factor_ceiling", format_double(psnr_factor_ceiling));
  kv.set("master_seed", std::to_string(master_seed));
  return kv;
}

GaConfig GaConfig::from_keys(const KeyValueFile& kv) {
  constexpr auto code = ErrorCode::InvalidConfig;
  GaConfig c;
  for (const auto& [k, v] : kv.entries()) {
    if (k == "population_size") c.population_size = parse_u64(k, v, code);
    else if (k == "max_generations") c.max_generations = parse_u64(k, v, code);
    else if (k == "crossover_rate") c.crossover_rate = parse_double(k, v, code);
    else if (k == "mutation_rate") c.mutation_rate = parse_double(k, v, code);
    else if (k == "mutation_subrates.structural") c.mutation_subrates.structural = parse_double(k, v, code);
    else if (k == "mutation_subrates.kind_change") c.mutation_subrates.kind_change = parse_double(k, v, code);
    else if (k == "mutation_subrates.param_perturb") c.mutation_subrates.param_perturb = parse_double(k, v, code);
    else if (k == "tournament_size") c.tournament_size = parse_u64(k, v, code);
    else if (k == "elite_count") c.elite_count = parse_u64(k, v, code);
    else if (k == "stagnation_epsilon") c.stagnation_epsilon = parse_double(k, v, code);
    else if (k == "stagnation_window") c.stagnation_window = parse_u64(k, v, code);
    else if (k == "psnr_threshold") c.psnr_threshold = parse_double(k, v, code);
    else if (k == "psnr_factor_ceiling") c.psnr_factor_ceiling = parse_double(k, v, code);
    else if (k == "master_seed") c.master_seed = parse_u64(k, v, code);
    else throw Error(code, "unknown GA key '" + k + "'");
  }
  c.check();
  return c;
}

GaConfig GaConfig::load(const std::filesystem::path& path) {
  return from_keys(KeyValueFile::load(path, ErrorCode::InvalidConfig));
}

double fitness_from_metrics(double iou, double psnr, const GaConfig& cfg) {
  if (!(psnr >= cfg.psnr_threshold)) return 0.0;
  const double factor = std::min(psnr / cfg.psnr_threshold, cfg.psnr_factor_ceiling);
  return (1.0 - iou) * factor;
}

FitnessRecord fitness(const Image& original, const LabelMap& truth, const Chromosome& ch,
                      const SegmentationOracle& oracle, const GaConfig& cfg) {
  if (truth.height() != original.height() || truth.width() != original.width())
    throw Error(ErrorCode::DimensionMismatch, "truth map does not match the image extent");
  const auto program = to_transform_sequence(ch);
  const Image distorted = apply_sequence(original, program);
  FitnessRecord rec;
  rec.psnr = psnr(original, distorted);
  if (rec.psnr < cfg.psnr_threshold) return rec;
  LabelMap predicted;
  try {
    predicted = oracle.segment(distorted);
  } catch (const Error& e) {
    throw Error(ErrorCode::OracleFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::OracleFailure, e.what());
  }
  rec.iou = iou(predicted, truth).mean_iou;
  rec.fitness = fitness_from_metrics(*rec.iou, rec.psnr, cfg);
  return rec;
}

std::size_t tournament_select(std::span<const double> fitness, std::size_t k, Rng& rng) {
  if (fitness.empty()) throw Error(ErrorCode::EmptyPopulation, "tournament over an empty population");
  if (k == 0 || k > fitness.size())
    throw Error(ErrorCode::InvalidConfig, "tournament size must lie in [1, population size]");
  std::vector<std::size_t> pool(fitness.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::size_t winner = 0;
  bool first = true;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                            static_cast<std::int64_t>(pool.size()) - 1));
    std::swap(pool[i], pool[j]);
    const auto cand = pool[i];
    if (first || fitness[cand] > fitness[winner] || (fitness[cand] == fitness[winner] && cand < winner)) {
      winner = cand;
      first = false;
    }
  }
  return winner;
}

std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& a, const Chromosome& b, CutPoints cuts_a,
                                               CutPoints cuts_b, const GenomeConfig& genome,
                                               bool a_is_fitter) {
  auto valid_cuts = [](const Chromosome& c, CutPoints cp) {
    return cp.first <= cp.second && cp.second <= c.genes.size();
  };
  if (!valid_cuts(a, cuts_a) || !valid_cuts(b, cuts_b))
    throw Error(ErrorCode::InvalidParams, "cut points must satisfy first <= second <= length");

  auto splice = [](const Chromosome& outer, CutPoints oc, const Chromosome& inner, CutPoints ic) {
    Chromosome child;
    const auto& og = outer.genes;
    const auto& ig = inner.genes;
    child.genes.insert(child.genes.end(), og.begin(), og.begin() + static_cast<std::ptrdiff_t>(oc.first));
    child.genes.insert(child.genes.end(), ig.begin() + static_cast<std::ptrdiff_t>(ic.first),
                       ig.begin() + static_cast<std::ptrdiff_t>(ic.second));
    child.genes.insert(child.genes.end(), og.begin() + static_cast<std::ptrdiff_t>(oc.second), og.end());
    return child;
  };
  auto repair = [&](Chromosome child) {
    if (child.genes.size() > genome.max_genes) child.genes.resize(genome.max_genes);
    if (child.genes.size() < genome.min_genes) return a_is_fitter ? a : b;
    return child;
  };
  return {repair(splice(a, cuts_a, b, cuts_b)), repair(splice(b, cuts_b, a, cuts_a))};
}

std::pair<Chromosome, Chromosome> crossover_two_point(const Chromosome& a, const Chromosome& b, Rng& rng,
                                                      const GenomeConfig& genome, bool a_is_fitter) {
  auto draw = [&](const Chromosome& c) {
    const auto n = static_cast<std::int64_t>(c.genes.size());
    auto x = static_cast<std::size_t>(rng.uniform_int(0, n));
    auto y = static_cast<std::size_t>(rng.uniform_int(0, n));
    if (x > y) std::swap(x, y);
    return CutPoints{x, y};
  };
  const auto ca = draw(a);
  const auto cb = draw(b);
  return crossover_at(a, b, ca, cb, genome, a_is_fitter);
}

MutationResult mutate_traced(const Chromosome& ch, const GaConfig& cfg, const GenomeConfig& genome, Rng& rng) {
  MutationResult out{ch, std::nullopt};
  if (!rng.bernoulli(cfg.mutation_rate)) return out;

  const double u = rng.uniform();
  const auto& s = cfg.mutation_subrates;
  const MutationLevel level = u < s.structural                   ? MutationLevel::Structural
                              : u < s.structural + s.kind_change ? MutationLevel::KindChange
                                                                 : MutationLevel::ParamPerturb;
  out.level = level;
  auto& genes = out.chromosome.genes;
  const auto n = static_cast<std::int64_t>(genes.size());

  switch (level) {
    case MutationLevel::Structural: {
      const bool can_insert = genes.size() < genome.max_genes;
      const bool can_delete = genes.size() > genome.min_genes && !genes.empty();
      if (!can_insert && !can_delete) break;
      const bool insert = can_insert && (!can_delete || rng.bernoulli(0.5));
      if (insert) {
        const auto at = rng.uniform_int(0, n);
        genes.insert(genes.begin() + at, random_gene(genome, rng));
      } else {
        genes.erase(genes.begin() + rng.uniform_int(0, n - 1));
      }
      break;
    }
    case MutationLevel::KindChange: {
      if (genes.empty()) break;
      auto& gene = genes[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
      auto kinds = drawable_kinds(genome);
      std::erase(kinds, gene.params.kind);
      const auto kind = kinds.empty()
                            ? gene.params.kind
                            : kinds[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(kinds.size()) - 1))];
      gene.params = random_params(kind, genome, rng);
      break;
    }
    case MutationLevel::ParamPerturb: {
      if (genes.empty()) break;
      perturb_parameter(genes[static_cast<std::size_t>(rng.uniform_int(0, n - 1))], genome, rng);
      break;
    }
  }
  return out;
}

Chromosome mutate(const Chromosome& ch, const GaConfig& cfg, const GenomeConfig& genome, Rng& rng) {
  return mutate_traced(ch, cfg, genome, rng).chromosome;
}

std::string_view to_string(TerminationReason reason) noexcept {
  switch (reason) {
    case TerminationReason::MaxGenerations: return "max_generations";
    case TerminationReason::Stagnation: return "stagnation";
    case TerminationReason::TimeBudget: return "time_budget";
  }
  return "unknown";
}

EvolveResult evolve(const Image& original, const LabelMap& truth, const SegmentationOracle& oracle,
                    const GaConfig& cfg, GenomeConfig genome,
                    std::optional<std::chrono::duration<double>> time_budget) {
  cfg.check();
  genome.target_shape = original.shape();
  genome.check();
  if (truth.height() != original.height() || truth.width() != original.width())
    throw Error(ErrorCode::DimensionMismatch, "truth map does not match the image extent");

  const auto started = std::chrono::steady_clock::now();
  const std::size_t n = cfg.population_size;
  Rng rng(cfg.master_seed);

  std::vector<Chromosome> population(n);
  for (auto& ch : population) ch = random_chromosome(genome, rng.next_u64());
  std::vector<std::optional<FitnessRecord>> records(n);

  // Every candidate is a pure function of its encoding, so repeated
  // chromosomes reuse the first evaluation.
  std::unordered_map<std::string, FitnessRecord> memo;
  EvolutionTrace trace;
  bool have_best = false;

  auto evaluate = [&](std::size_t generation) {
    std::vector<std::size_t> pending;
    std::vector<std::string> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (records[i]) continue;
      const auto bytes = encode(population[i]);
      keys[i].assign(bytes.begin(), bytes.end());
      if (const auto it = memo.find(keys[i]); it != memo.end()) {
        records[i] = it->second;
      } else if (std::find_if(pending.begin(), pending.end(),
                              [&](std::size_t j) { return keys[j] == keys[i]; }) == pending.end()) {
        pending.push_back(i);
      }
    }

    std::vector<FitnessRecord> results(pending.size());
    std::vector<std::exception_ptr> errors(pending.size());
    const auto count = static_cast<std::int64_t>(pending.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < count; ++t) {
      try {
        results[t] = fitness(original, truth, population[pending[t]], oracle, cfg);
        results[t].generation = generation;
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }

    for (std::size_t t = 0; t < pending.size(); ++t) {
      if (!errors[t]) continue;
      std::string why;
      try {
        std::rethrow_exception(errors[t]);
      } catch (const std::exception& e) {
        why = e.what();
      }
      throw EvolutionAborted("chromosome " + std::to_string(pending[t]) + " in generation " +
                                 std::to_string(generation) + ": " + why,
                             trace);
    }

    std::size_t calls = 0;
    for (std::size_t t = 0; t < pending.size(); ++t) {
      if (results[t].iou) ++calls;
      memo.emplace(keys[pending[t]], results[t]);
      records[pending[t]] = results[t];
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!records[i]) records[i] = memo.at(keys[i]);
    return calls;
  };

  std::size_t stagnant = 0;
  for (std::size_t generation = 0;; ++generation) {
    const auto calls = evaluate(generation);
    trace.oracle_calls += calls;

    GenerationStats stats{generation, 0.0, 0.0, calls};
    std::size_t best_index = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += records[i]->fitness;
      if (records[i]->fitness > records[best_index]->fitness) best_index = i;
    }
    stats.best_fitness = records[best_index]->fitness;
    stats.mean_fitness = total / static_cast<double>(n);

    const double previous_best = have_best ? trace.best_record.fitness : 0.0;
    if (!have_best || stats.best_fitness > trace.best_record.fitness) {
      trace.best = population[best_index];
      trace.best_record = *records[best_index];
      have_best = true;
    }
    trace.generations.push_back(stats);

    if (generation > 0) {
      const double current = trace.best_record.fitness;
      const double gain = current - previous_best;
      const double relative = previous_best > 0.0 ? gain / previous_best : (gain > 0.0 ? INFINITY : 0.0);
      stagnant = relative < cfg.stagnation_epsilon ? stagnant + 1 : 0;
      if (stagnant >= cfg.stagnation_window) {
        trace.termination = TerminationReason::Stagnation;
        break;
      }
    }
    if (generation + 1 >= cfg.max_generations) {
      trace.termination = TerminationReason::MaxGenerations;
      break;
    }
    if (time_budget && std::chrono::steady_clock::now() - started >= *time_budget) {
      trace.termination = TerminationReason::TimeBudget;
      break;
    }

    std::vector<double> fit(n);
    for (std::size_t i = 0; i < n; ++i) fit[i] = records[i]->fitness;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return fit[x] > fit[y]; });

    std::vector<Chromosome> next;
    std::vector<std::optional<FitnessRecord>> next_records;
    next.reserve(n);
    for (std::size_t e = 0; e < cfg.elite_count; ++e) {
      next.push_back(population[order[e]]);
      next_records.push_back(records[order[e]]);
    }
    while (next.size() < n) {
      const auto i1 = tournament_select(fit, cfg.tournament_size, rng);
      const auto i2 = tournament_select(fit, cfg.tournament_size, rng);
      Chromosome c1 = population[i1];
      Chromosome c2 = population[i2];
      if (rng.bernoulli(cfg.crossover_rate))
        std::tie(c1, c2) = crossover_two_point(population[i1], population[i2], rng, genome, fit[i1] >= fit[i2]);
      c1 = mutate(c1, cfg, genome, rng);
      c2 = mutate(c2, cfg, genome, rng);
      next.push_back(std::move(c1));
      next_records.emplace_back();
      if (next.size() < n) {
        next.push_back(std::move(c2));
        next_records.emplace_back();
      }
    }
    population = std::move(next);
    records = std::move(next_records);
  }

  EvolveResult result;
  result.best = trace.best;
  result.best_record = trace.best_record;
  result.trace = std::move(trace);
  return result;
}

}  // namespace segrmt
