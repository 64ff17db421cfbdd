#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <random>

#include "segrmt/dataset.hpp"
#include "segrmt/error.hpp"
#include "segrmt/evolution.hpp"
#include "support.hpp"

using namespace segrmt;

namespace {

// Ignores its input.
class TruthOracle final : public SegmentationOracle {
 public:
  explicit TruthOracle(LabelMap truth) : truth_(std::move(truth)) {}
  LabelMap segment(const Image&) const override {
    ++calls;
    return truth_;
  }
  std::string descriptor() const override { return "truth"; }
  mutable std::atomic<std::size_t> calls{0};

 private:
  LabelMap truth_;
};

class FailAfter final : public SegmentationOracle {
 public:
  FailAfter(const SegmentationOracle& inner, std::size_t ok) : inner_(inner), ok_(ok) {}
  LabelMap segment(const Image& img) const override {
    if (seen_++ >= ok_) throw Error(ErrorCode::OracleError, "model crashed");
    return inner_.segment(img);
  }
  std::string descriptor() const override { return "fail-after"; }

 private:
  const SegmentationOracle& inner_;
  std::size_t ok_;
  mutable std::atomic<std::size_t> seen_{0};
};

SubTransform tagged(std::uint64_t tag) {
  SubTransform g;
  g.params.kind = DistortionKind::SaltPepper;
  g.params.p_salt = 0.01;
  g.params.p_pepper = 0.01;
  g.seed = tag;
  return g;
}

Chromosome tagged_chain(std::uint64_t base, std::size_t n) {
  Chromosome ch;
  for (std::size_t i = 0; i < n; ++i) ch.genes.push_back(tagged(base + i));
  return ch;
}

std::vector<std::uint64_t> tags(const Chromosome& ch) {
  std::vector<std::uint64_t> out;
  for (const auto& g : ch.genes) out.push_back(g.seed);
  return out;
}

Scene scene(std::uint64_t seed) { return synth_scene(random_scene_spec(64, 64, seed), seed); }

GaConfig small_ga(std::uint64_t seed) {
  GaConfig cfg;
  cfg.population_size = 16;
  cfg.max_generations = 12;
  cfg.master_seed = seed;
  return cfg;
}

}  // namespace

TEST(Fitness, KnownValue) {
  GaConfig cfg;
  EXPECT_NEAR(fitness_from_metrics(0.064, 24.0, cfg), 1.1232, 1e-12);
  EXPECT_EQ(fitness_from_metrics(0.0, 19.99, cfg), 0.0);
  EXPECT_EQ(fitness_from_metrics(0.3, 20.0, cfg), 0.7);
}

TEST(Fitness, CeilingCapsInfinitePsnr) {
  GaConfig cfg;
  EXPECT_DOUBLE_EQ(fitness_from_metrics(0.5, std::numeric_limits<double>::infinity(), cfg), 1.25);
  EXPECT_DOUBLE_EQ(fitness_from_metrics(0.0, 80.0, cfg), 2.5);
}

TEST(Fitness, FormulaCrossCheck) {
  GaConfig cfg;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> iou(0.0, 1.0), psnr(5.0, 60.0);
  for (int i = 0; i < 100; ++i) {
    const double u = iou(gen), p = psnr(gen);
    const double want = p < 20.0 ? 0.0 : (1.0 - u) * std::min(p / 20.0, 2.5);
    EXPECT_NEAR(fitness_from_metrics(u, p, cfg), want, 1e-12);
  }
}

TEST(Fitness, IdentityScoresZero) {
  const auto s = scene(3);
  Chromosome ch;
  ch.genes.push_back(tagged(1));
  ch.genes[0].active = false;
  const auto rec = fitness(s.image, s.labels, ch, PaletteSegmenter::builtin(), GaConfig{});
  ASSERT_TRUE(rec.iou.has_value());
  EXPECT_EQ(*rec.iou, 1.0);
  EXPECT_TRUE(std::isinf(rec.psnr));
  EXPECT_EQ(rec.fitness, 0.0);
}

TEST(Fitness, GateSkipsOracle) {
  const auto s = scene(4);
  TruthOracle oracle(s.labels);
  Chromosome ch;
  SubTransform g;
  g.params.kind = DistortionKind::SpatialGaussian;
  g.params.sigma = 120.0;
  g.seed = 9;
  ch.genes.push_back(g);
  const auto rec = fitness(s.image, s.labels, ch, oracle, GaConfig{});
  EXPECT_LT(rec.psnr, 20.0);
  EXPECT_EQ(rec.fitness, 0.0);
  EXPECT_FALSE(rec.iou.has_value());
  EXPECT_EQ(oracle.calls.load(), 0u);
}

TEST(Fitness, Errors) {
  const auto s = scene(5);
  Chromosome ch;
  ch.genes.push_back(tagged(1));
  EXPECT_THROW((void)fitness(s.image, LabelMap(8, 8), ch, PaletteSegmenter::builtin(), GaConfig{}), Error);
  const PaletteSegmenter& p = PaletteSegmenter::builtin();
  FailAfter bad(p, 0);
  try {
    (void)fitness(s.image, s.labels, ch, bad, GaConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OracleFailure);
  }
}

TEST(Tournament, FullSizeReturnsArgmax) {
  Rng rng(1);
  const std::vector<double> f{0.2, 0.7, 0.1, 0.7, 0.5};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(tournament_select(f, f.size(), rng), 1u);
}

TEST(Tournament, PairAlwaysPicksBetter) {
  Rng rng(2);
  const std::vector<double> f{0.1, 0.9};
  for (int i = 0; i < 200; ++i) EXPECT_EQ(tournament_select(f, 2, rng), 1u);
}

TEST(Tournament, SizeOneIsUniform) {
  Rng rng(3);
  const std::vector<double> f{0.0, 1.0, 2.0, 3.0};
  std::array<int, 4> hits{};
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++hits[tournament_select(f, 1, rng)];
  const double sd = std::sqrt(n * 0.25 * 0.75);
  for (int h : hits) EXPECT_LT(std::abs(h - n / 4.0), 4 * sd);
}

TEST(Tournament, Errors) {
  Rng rng(4);
  try {
    (void)tournament_select(std::vector<double>{}, 1, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyPopulation);
  }
  EXPECT_THROW((void)tournament_select(std::vector<double>{1.0}, 2, rng), Error);
  EXPECT_THROW((void)tournament_select(std::vector<double>{1.0}, 0, rng), Error);
}

TEST(Crossover, EmptyCutsKeepParents) {
  const auto a = tagged_chain(10, 3), b = tagged_chain(20, 5);
  const auto [c1, c2] = crossover_at(a, b, {0, 0}, {0, 0}, GenomeConfig{}, true);
  EXPECT_EQ(c1, a);
  EXPECT_EQ(c2, b);
}

TEST(Crossover, FullCutsSwapParents) {
  const auto a = tagged_chain(10, 3), b = tagged_chain(20, 5);
  const auto [c1, c2] = crossover_at(a, b, {0, 3}, {0, 5}, GenomeConfig{}, true);
  EXPECT_EQ(c1, b);
  EXPECT_EQ(c2, a);
}

TEST(Crossover, SpliceArithmetic) {
  const auto a = tagged_chain(10, 3), b = tagged_chain(20, 5);
  const auto [c1, c2] = crossover_at(a, b, {1, 2}, {1, 4}, GenomeConfig{}, true);
  EXPECT_EQ(tags(c1), (std::vector<std::uint64_t>{10, 21, 22, 23, 12}));
  EXPECT_EQ(tags(c2), (std::vector<std::uint64_t>{20, 11, 24}));
}

TEST(Crossover, Repair) {
  GenomeConfig g;
  g.min_genes = 2;
  g.max_genes = 4;
  const auto a = tagged_chain(10, 2), b = tagged_chain(20, 4);
  // Child 1 gets 4 + 2 genes, child 2 none.
  const auto [c1, c2] = crossover_at(a, b, {0, 0}, {0, 4}, g, false);
  EXPECT_EQ(tags(c1), (std::vector<std::uint64_t>{20, 21, 22, 23}));
  EXPECT_EQ(c2, b);
  const auto [d1, d2] = crossover_at(a, b, {0, 0}, {0, 4}, g, true);
  EXPECT_EQ(d2, a);
  (void)d1;
  EXPECT_THROW((void)crossover_at(a, b, {2, 1}, {0, 0}, g, true), Error);
  EXPECT_THROW((void)crossover_at(a, b, {0, 3}, {0, 0}, g, true), Error);
}

TEST(Crossover, RandomCutsStayWithinBounds) {
  GenomeConfig g;
  g.target_shape = {32, 32, 3};
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_chromosome(g, rng.next_u64()), b = random_chromosome(g, rng.next_u64());
    const auto [c1, c2] = crossover_two_point(a, b, rng, g, i % 2 == 0);
    EXPECT_TRUE(validate(c1, g, g.target_shape).empty());
    EXPECT_TRUE(validate(c2, g, g.target_shape).empty());
  }
}

TEST(Mutation, RateZeroIsIdentity) {
  GaConfig cfg;
  cfg.mutation_rate = 0.0;
  GenomeConfig g;
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto ch = random_chromosome(g, i);
    const auto r = mutate_traced(ch, cfg, g, rng);
    EXPECT_EQ(r.chromosome, ch);
    EXPECT_FALSE(r.level.has_value());
  }
}

TEST(Mutation, FullLengthStructuralOnlyDeletes) {
  GaConfig cfg;
  cfg.mutation_rate = 1.0;
  cfg.mutation_subrates = {1.0, 0.0, 0.0};
  GenomeConfig g;
  g.max_genes = 4;
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto ch = tagged_chain(100, 4);
    const auto r = mutate_traced(ch, cfg, g, rng);
    ASSERT_EQ(r.level, MutationLevel::Structural);
    ASSERT_EQ(r.chromosome.genes.size(), 3u);
  }
}

TEST(Mutation, MinLengthStructuralOnlyInserts) {
  GaConfig cfg;
  cfg.mutation_rate = 1.0;
  cfg.mutation_subrates = {1.0, 0.0, 0.0};
  GenomeConfig g;
  g.min_genes = 2;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) ASSERT_EQ(mutate(tagged_chain(1, 2), cfg, g, rng).genes.size(), 3u);
}

TEST(Mutation, KindChangeAltersKind) {
  GaConfig cfg;
  cfg.mutation_rate = 1.0;
  cfg.mutation_subrates = {0.0, 1.0, 0.0};
  GenomeConfig g;
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto ch = tagged_chain(1, 1);
    const auto out = mutate(ch, cfg, g, rng);
    ASSERT_EQ(out.genes.size(), 1u);
    EXPECT_NE(out.genes[0].params.kind, DistortionKind::SaltPepper);
  }
}

TEST(Mutation, LevelFrequencies) {
  GaConfig cfg;
  cfg.mutation_rate = 1.0;
  GenomeConfig g;
  Rng rng(10);
  std::array<int, 3> hits{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto r = mutate_traced(random_chromosome(g, i), cfg, g, rng);
    ASSERT_TRUE(r.level.has_value());
    ++hits[static_cast<int>(*r.level)];
  }
  EXPECT_NEAR(hits[0] / double(n), 0.3, 0.02);
  EXPECT_NEAR(hits[1] / double(n), 0.3, 0.02);
  EXPECT_NEAR(hits[2] / double(n), 0.4, 0.02);
}

TEST(Mutation, RateIsRespected) {
  GaConfig cfg;
  GenomeConfig g;
  Rng rng(11);
  int mutated = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) mutated += mutate_traced(random_chromosome(g, i), cfg, g, rng).level.has_value();
  EXPECT_NEAR(mutated / double(n), 0.2, 4 * std::sqrt(0.2 * 0.8 / n));
}

TEST(Mutation, ResultsAlwaysValidate) {
  GaConfig cfg;
  cfg.mutation_rate = 1.0;
  GenomeConfig g;
  g.target_shape = {24, 40, 3};
  Rng rng(12);
  auto ch = random_chromosome(g, 1);
  for (int i = 0; i < 5000; ++i) {
    ch = mutate(ch, cfg, g, rng);
    const auto v = validate(ch, g, g.target_shape);
    ASSERT_TRUE(v.empty()) << "step " << i << ": " << v.front().rule;
  }
}

TEST(Mutation, GrayImagesNeverGetChannelKinds) {
  GaConfig cfg;
  cfg.mutation_rate = 1.0;
  GenomeConfig g;
  g.target_shape = {16, 16, 1};
  Rng rng(13);
  auto ch = random_chromosome(g, 2);
  for (int i = 0; i < 2000; ++i) {
    ch = mutate(ch, cfg, g, rng);
    for (const auto& gene : ch.genes) ASSERT_FALSE(is_channel_kind(gene.params.kind));
  }
}

TEST(GaConfigKeys, RoundTrip) {
  GaConfig cfg;
  cfg.population_size = 12;
  cfg.mutation_subrates = {0.5, 0.25, 0.25};
  cfg.master_seed = 0xFFFFFFFFFFFFFFFFULL;
  cfg.stagnation_epsilon = 1e-4;
  EXPECT_EQ(GaConfig::from_keys(cfg.to_keys()), cfg);
}

TEST(GaConfigKeys, Rejects) {
  KeyValueFile kv;
  kv.set("populaton_size", "10");
  EXPECT_THROW((void)GaConfig::from_keys(kv), Error);
  GaConfig cfg;
  cfg.elite_count = cfg.population_size;
  EXPECT_THROW(cfg.check(), Error);
  cfg = {};
  cfg.tournament_size = 51;
  EXPECT_THROW(cfg.check(), Error);
  cfg = {};
  cfg.mutation_subrates = {0.3, 0.3, 0.3};
  EXPECT_THROW(cfg.check(), Error);
  cfg = {};
  cfg.crossover_rate = 1.5;
  EXPECT_THROW(cfg.check(), Error);
}

TEST(Evolve, ConstantLandscapeStopsOnStagnation) {
  const auto s = scene(20);
  TruthOracle oracle(s.labels);
  GaConfig cfg = small_ga(1);
  cfg.max_generations = 100;
  const auto r = evolve(s.image, s.labels, oracle, cfg, GenomeConfig{});
  EXPECT_EQ(r.trace.termination, TerminationReason::Stagnation);
  EXPECT_EQ(r.trace.generations.size(), cfg.stagnation_window + 1);
  EXPECT_EQ(r.best_record.fitness, 0.0);
  for (const auto& g : r.trace.generations) EXPECT_EQ(g.best_fitness, 0.0);
}

TEST(Evolve, CustomWindow) {
  const auto s = scene(21);
  TruthOracle oracle(s.labels);
  GaConfig cfg = small_ga(2);
  cfg.stagnation_window = 4;
  const auto r = evolve(s.image, s.labels, oracle, cfg, GenomeConfig{});
  EXPECT_EQ(r.trace.termination, TerminationReason::Stagnation);
  EXPECT_EQ(r.trace.generations.size(), 5u);
}

TEST(Evolve, MaxGenerations) {
  const auto s = scene(22);
  GaConfig cfg = small_ga(3);
  cfg.max_generations = 3;
  const auto r = evolve(s.image, s.labels, PaletteSegmenter::builtin(), cfg, GenomeConfig{});
  EXPECT_EQ(r.trace.generations.size(), 3u);
  EXPECT_EQ(r.trace.termination, TerminationReason::MaxGenerations);
  EXPECT_EQ(to_string(r.trace.termination), "max_generations");
}

TEST(Evolve, TimeBudget) {
  const auto s = scene(23);
  GaConfig cfg = small_ga(4);
  cfg.max_generations = 1000;
  cfg.stagnation_window = 1000;
  const auto r = evolve(s.image, s.labels, PaletteSegmenter::builtin(), cfg, GenomeConfig{},
                        std::chrono::duration<double>(0.0));
  EXPECT_EQ(r.trace.termination, TerminationReason::TimeBudget);
  EXPECT_EQ(r.trace.generations.size(), 1u);
}

TEST(Evolve, Deterministic) {
  const auto s = scene(24);
  const GaConfig cfg = small_ga(5);
  const auto a = evolve(s.image, s.labels, PaletteSegmenter::builtin(), cfg, GenomeConfig{});
  const auto b = evolve(s.image, s.labels, PaletteSegmenter::builtin(), cfg, GenomeConfig{});
  EXPECT_EQ(a.best, b.best);
  ASSERT_EQ(a.trace.generations.size(), b.trace.generations.size());
  for (std::size_t i = 0; i < a.trace.generations.size(); ++i) {
    EXPECT_EQ(a.trace.generations[i].best_fitness, b.trace.generations[i].best_fitness);
    EXPECT_EQ(a.trace.generations[i].mean_fitness, b.trace.generations[i].mean_fitness);
    EXPECT_EQ(a.trace.generations[i].oracle_calls, b.trace.generations[i].oracle_calls);
  }
}

TEST(Evolve, InvariantsHold) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto s = scene(30 + seed);
    const GaConfig cfg = small_ga(seed);
    const auto r = evolve(s.image, s.labels, PaletteSegmenter::builtin(), cfg, GenomeConfig{});
    const auto& gens = r.trace.generations;
    for (std::size_t i = 1; i < gens.size(); ++i) EXPECT_GE(gens[i].best_fitness, gens[i - 1].best_fitness);
    EXPECT_LE(r.trace.oracle_calls, cfg.population_size * gens.size());
    GenomeConfig g;
    g.target_shape = s.image.shape();
    EXPECT_TRUE(validate(r.best, g, g.target_shape).empty());
    EXPECT_EQ(r.best_record.fitness, gens.back().best_fitness);
    if (r.best_record.psnr < cfg.psnr_threshold) EXPECT_EQ(r.best_record.fitness, 0.0);
    // The reported record is reproducible from the chromosome alone.
    const auto again = fitness(s.image, s.labels, r.best, PaletteSegmenter::builtin(), cfg);
    EXPECT_EQ(again.fitness, r.best_record.fitness);
    EXPECT_EQ(again.psnr, r.best_record.psnr);
  }
}

TEST(Evolve, AbortKeepsPartialTrace) {
  const auto s = scene(40);
  const auto& palette = PaletteSegmenter::builtin();
  GaConfig cfg = small_ga(6);
  // Generation 0 always fits in the allowance.
  FailAfter oracle(palette, cfg.population_size);
  try {
    (void)evolve(s.image, s.labels, oracle, cfg, GenomeConfig{});
    FAIL() << "expected abort";
  } catch (const EvolutionAborted& e) {
    EXPECT_EQ(e.code(), ErrorCode::OracleFailure);
    EXPECT_NE(std::string(e.what()).find("chromosome"), std::string::npos);
    EXPECT_GE(e.partial_trace().generations.size(), 1u);
  }
}

TEST(Evolve, DimensionMismatch) {
  const auto s = scene(41);
  EXPECT_THROW((void)evolve(s.image, LabelMap(10, 10), PaletteSegmenter::builtin(), small_ga(1), GenomeConfig{}),
               Error);
}

TEST(Evolve, ImprovesOverGenerationZero) {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = scene(100 + seed);
    GaConfig cfg;
    cfg.population_size = 20;
    cfg.max_generations = 25;
    cfg.master_seed = seed;
    const auto r = evolve(s.image, s.labels, PaletteSegmenter::builtin(), cfg, GenomeConfig{});
    const double first = r.trace.generations.front().best_fitness;
    EXPECT_GE(r.best_record.fitness, first);
    improved += r.best_record.fitness > first;
  }
  EXPECT_GE(improved, 9);
}
