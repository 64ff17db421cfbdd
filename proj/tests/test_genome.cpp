#include <gtest/gtest.h>

#include <map>

#include "segrmt/error.hpp"
#include "segrmt/genome.hpp"
#include "support.hpp"

using namespace segrmt;

namespace {

// Built with Python's struct module from the documented layout.
constexpr const char* kGoldenHex =
    "53524d540102000000030108070605040302010207000000000000c03f08000000000000b03f0100050000000000000003030104030000"
    "000501";

Chromosome golden() {
  Chromosome ch;
  SubTransform a;
  a.params.kind = DistortionKind::SaltPepper;
  a.params.p_salt = 0.125;
  a.params.p_pepper = 0.0625;
  a.seed = 0x0102030405060708ULL;
  SubTransform b;
  b.active = false;
  b.params.kind = DistortionKind::LineColumnDropout;
  b.params.orientation = Orientation::Column;
  b.params.index = 3;
  b.params.const_choice = ConstChoice::Max;
  b.seed = 5;
  ch.genes = {a, b};
  return ch;
}

std::string malformed_message(const std::vector<std::uint8_t>& bytes) {
  try {
    (void)decode(bytes);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedPayload);
    return e.what();
  }
  ADD_FAILURE() << "decoded";
  return {};
}

}  // namespace

TEST(GenomeConfig, Validation) {
  GenomeConfig c;
  EXPECT_NO_THROW(c.check());
  c.min_genes = 0;
  EXPECT_THROW(c.check(), Error);
  c = {};
  c.min_genes = 4;
  c.max_genes = 3;
  EXPECT_THROW(c.check(), Error);
  c = {};
  c.kind_weights.fill(0);
  EXPECT_THROW(c.check(), Error);
  c = {};
  c.kind_weights[0] = -1;
  EXPECT_THROW(c.check(), Error);
}

TEST(RandomChromosome, ForcedConfiguration) {
  GenomeConfig c;
  c.min_genes = c.max_genes = 1;
  c.kind_weights.fill(0);
  c.kind_weights[static_cast<std::size_t>(DistortionKind::LineStripping)] = 1;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto ch = random_chromosome(c, s);
    ASSERT_EQ(ch.genes.size(), 1u);
    EXPECT_EQ(ch.genes[0].params.kind, DistortionKind::LineStripping);
  }
}

TEST(RandomChromosome, Deterministic) {
  GenomeConfig c;
  EXPECT_EQ(random_chromosome(c, 99), random_chromosome(c, 99));
  EXPECT_NE(random_chromosome(c, 99), random_chromosome(c, 100));
}

TEST(RandomChromosome, LengthIsUniform) {
  GenomeConfig c;
  c.min_genes = 1;
  c.max_genes = 5;
  std::map<std::size_t, int> counts;
  for (std::uint64_t s = 0; s < 1000; ++s) counts[random_chromosome(c, s).genes.size()]++;
  ASSERT_EQ(counts.size(), 5u);
  for (auto [len, n] : counts) EXPECT_NEAR(n / 1000.0, 0.2, 0.04) << len;
}

TEST(RandomChromosome, AlwaysValid) {
  GenomeConfig c;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    auto ch = random_chromosome(c, s);
    auto v = validate(ch, c, c.target_shape);
    ASSERT_TRUE(v.empty()) << s << ": " << v.front().rule;
  }
  GenomeConfig gray;
  gray.target_shape = {17, 9, 1};
  for (std::uint64_t s = 0; s < 2000; ++s) {
    auto ch = random_chromosome(gray, s);
    ASSERT_TRUE(validate(ch, gray, gray.target_shape).empty()) << s;
    for (auto& g : ch.genes) EXPECT_FALSE(is_channel_kind(g.params.kind));
  }
}

TEST(RandomChromosome, KindWeightsRespected) {
  GenomeConfig c;
  c.kind_weights = {0, 0, 0, 3, 1, 0, 0};
  std::map<DistortionKind, int> counts;
  int total = 0;
  for (std::uint64_t s = 0; s < 2000; ++s)
    for (auto& g : random_chromosome(c, s).genes) {
      counts[g.params.kind]++;
      ++total;
    }
  ASSERT_EQ(counts.size(), 2u);
  const double p = counts[DistortionKind::SaltPepper] / double(total);
  EXPECT_NEAR(p, 0.75, 4 * std::sqrt(0.75 * 0.25 / total));
}

TEST(RandomChromosome, ParametersWithinBounds) {
  GenomeConfig c;
  for (std::uint64_t s = 0; s < 3000; ++s)
    for (auto& g : random_chromosome(c, s).genes) {
      for (auto param : bounded_params(g.params.kind))
        EXPECT_TRUE(c.bounds.interval(g.params.kind, param).contains(get_param(g.params, param)));
      EXPECT_FALSE(g.params.affected_indices.has_value());
    }
}

TEST(Validate, Examples) {
  GenomeConfig c;
  Chromosome ch;
  SubTransform g;
  g.params.kind = DistortionKind::SaltPepper;
  g.params.p_salt = 0.9;
  ch.genes = {g};
  auto v = validate(ch, c, c.target_shape);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].gene, 0u);
  EXPECT_NE(v[0].rule.find("p_salt"), std::string::npos);

  Chromosome longer = random_chromosome(c, 1);
  longer.genes.assign(c.max_genes + 1, random_chromosome(c, 1).genes[0]);
  auto lv = validate(longer, c, c.target_shape);
  ASSERT_FALSE(lv.empty());
  EXPECT_FALSE(lv[0].gene.has_value());
  EXPECT_NE(lv[0].rule.find("length"), std::string::npos);
}

TEST(Validate, AffectedIndicesLimits) {
  GenomeConfig c;
  c.target_shape = {4, 4, 3};
  Chromosome ch;
  SubTransform g;
  g.params.kind = DistortionKind::SpatialGaussian;
  g.params.affected_indices = std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7, 8};
  ch.genes = {g};
  EXPECT_EQ(validate(ch, c, c.target_shape).size(), 1u);
  g.params.affected_indices = std::vector<std::uint32_t>{16};
  ch.genes = {g};
  EXPECT_EQ(validate(ch, c, c.target_shape).size(), 1u);
  g.params.affected_indices = std::vector<std::uint32_t>{0, 15};
  ch.genes = {g};
  EXPECT_TRUE(validate(ch, c, c.target_shape).empty());
}

TEST(ToTransformSequence, FiltersInactive) {
  Chromosome ch = random_chromosome(GenomeConfig{}, 3);
  ch.genes.resize(1);
  ch.genes[0].active = true;
  SubTransform a = ch.genes[0], b = a, c = a;
  a.seed = 1;
  b.seed = 2;
  b.active = false;
  c.seed = 3;
  ch.genes = {a, b, c};
  auto seq = to_transform_sequence(ch);
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[0].seed, 1u);
  EXPECT_EQ(seq[1].seed, 3u);
  for (auto& g : ch.genes) g.active = false;
  EXPECT_TRUE(to_transform_sequence(ch).empty());
}

TEST(ToTransformSequence, IdentityFloorAndDeterminism) {
  std::mt19937_64 gen(4);
  auto img = testing_support::random_image(gen, 64, 64, 3);
  GenomeConfig c;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto ch = random_chromosome(c, s);
    EXPECT_EQ(apply_sequence(img, to_transform_sequence(ch)), apply_sequence(img, to_transform_sequence(ch)));
    for (auto& g : ch.genes) g.active = false;
    EXPECT_EQ(apply_sequence(img, to_transform_sequence(ch)), img);
  }
}

TEST(Codec, GoldenBytes) {
  const auto bytes = encode(golden());
  EXPECT_EQ(to_hex(bytes), kGoldenHex);
  EXPECT_EQ(decode(from_hex(kGoldenHex)), golden());
}

TEST(Codec, RoundTripsRandomChromosomes) {
  GenomeConfig c;
  for (std::uint64_t s = 0; s < 5000; ++s) {
    auto ch = random_chromosome(c, s);
    if (s % 3 == 0) ch.genes[0].params.affected_indices = std::vector<std::uint32_t>{1, 5, 9, 4095};
    if (s % 5 == 0) ch.genes[0].params.mu = -3.25;  // field the kind may not use
    ASSERT_EQ(decode(encode(ch)), ch) << s;
    ASSERT_EQ(decode(from_hex(to_hex(encode(ch)))), ch);
  }
}

TEST(Codec, EmptyAffectedListDiffersFromAbsent) {
  Chromosome ch = golden();
  ch.genes[0].params.affected_indices = std::vector<std::uint32_t>{};
  auto back = decode(encode(ch));
  ASSERT_TRUE(back.genes[0].params.affected_indices.has_value());
  EXPECT_TRUE(back.genes[0].params.affected_indices->empty());
}

TEST(Codec, MalformedPayloads) {
  const auto good = encode(golden());
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    std::vector<std::uint8_t> truncated(good.begin(), good.begin() + cut);
    const auto msg = malformed_message(truncated);
    EXPECT_NE(msg.find("offset"), std::string::npos) << msg;
  }
  auto version = good;
  version[4] = 0x09;
  EXPECT_NE(malformed_message(version).find("version 9"), std::string::npos);

  auto magic = good;
  magic[0] = 'X';
  EXPECT_NE(malformed_message(magic).find("offset 0"), std::string::npos);

  auto trailing = good;
  trailing.push_back(0);
  malformed_message(trailing);

  auto kind = good;
  kind[9] = 0x07;
  malformed_message(kind);

  auto tag = good;
  tag[20] = 0x0D;  // first field tag of gene 0
  malformed_message(tag);

  auto dup = good;
  dup[29] = 0x07;  // second tag repeats the first
  malformed_message(dup);

  auto huge = good;
  huge[5] = huge[6] = huge[7] = huge[8] = 0xFF;
  malformed_message(huge);
}

TEST(Codec, HexRejectsGarbage) {
  EXPECT_THROW((void)from_hex("abc"), Error);
  EXPECT_THROW((void)from_hex("zz"), Error);
  EXPECT_EQ(from_hex("00ff10"), (std::vector<std::uint8_t>{0, 255, 16}));
  EXPECT_EQ(from_hex("ABcd"), (std::vector<std::uint8_t>{0xAB, 0xCD}));
}
