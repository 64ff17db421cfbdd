#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "segrmt/error.hpp"
#include "segrmt/transforms.hpp"
#include "support.hpp"

using namespace segrmt;
using testing_support::random_image;

namespace {

DistortionParams make(DistortionKind kind) {
  DistortionParams p;
  p.kind = kind;
  return p;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::EmptySet;
}

double altered_fraction(const Image& a, const Image& b) {
  std::size_t changed = 0;
  for (std::size_t px = 0; px < a.pixel_count(); ++px) {
    bool diff = false;
    for (std::uint32_t c = 0; c < a.channels(); ++c)
      diff |= a.samples()[px * a.channels() + c] != b.samples()[px * a.channels() + c];
    changed += diff;
  }
  return double(changed) / double(a.pixel_count());
}

// Image avoiding the extreme values so every replacement is observable.
Image mid_image(std::mt19937_64& gen, std::uint32_t h, std::uint32_t w, std::uint32_t c) {
  auto img = random_image(gen, h, w, c);
  for (auto& v : img.samples()) v = static_cast<std::uint8_t>(20 + v % 200);
  img.samples()[0] = 0;
  img.samples()[1] = 255;
  return img;
}

}  // namespace

TEST(DistortionKind, NamesRoundTrip) {
  for (auto k : kAllDistortionKinds) EXPECT_EQ(parse_distortion_kind(to_string(k)), k);
  EXPECT_EQ(to_string(DistortionKind::SaltPepper), "SaltPepper");
  EXPECT_FALSE(parse_distortion_kind("saltpepper"));
}

TEST(RegionDropout, Examples) {
  std::mt19937_64 gen(1);
  auto img = random_image(gen, 16, 16, 3);
  auto p = make(DistortionKind::RegionDropout);
  EXPECT_EQ(region_dropout(img, p, 9), img);
  p.p_min = 1.0;
  auto all_min = region_dropout(img, p, 9);
  for (auto v : all_min.samples()) EXPECT_EQ(v, img.min_sample());
  p.p_min = 0.6;
  p.p_max = 0.5;
  EXPECT_EQ(code_of([&] { (void)region_dropout(img, p, 0); }), ErrorCode::InvalidParams);
}

TEST(RegionDropout, PixelsMoveTogether) {
  std::mt19937_64 gen(2);
  auto img = mid_image(gen, 64, 64, 3);
  auto p = make(DistortionKind::RegionDropout);
  p.p_min = 0.2;
  p.p_max = 0.2;
  auto out = region_dropout(img, p, 4);
  const auto lo = img.min_sample(), hi = img.max_sample();
  for (std::size_t px = 1; px < img.pixel_count(); ++px) {
    const auto* o = &out.samples()[px * 3];
    const auto* i = &img.samples()[px * 3];
    const bool all_lo = o[0] == lo && o[1] == lo && o[2] == lo;
    const bool all_hi = o[0] == hi && o[1] == hi && o[2] == hi;
    const bool same = o[0] == i[0] && o[1] == i[1] && o[2] == i[2];
    EXPECT_TRUE(all_lo || all_hi || same) << px;
  }
}

TEST(RegionDropout, AlteredFractionNearHalf) {
  std::mt19937_64 gen(3);
  auto img = mid_image(gen, 256, 256, 1);
  auto p = make(DistortionKind::RegionDropout);
  p.p_min = p.p_max = 0.25;
  EXPECT_NEAR(altered_fraction(img, region_dropout(img, p, 77)), 0.5, 0.02);
}

TEST(LineColumnDropout, Examples) {
  Image all_min(4, 4, 1, 3);
  auto p = make(DistortionKind::LineColumnDropout);
  EXPECT_EQ(line_column_dropout(all_min, p), all_min);

  Image seven(4, 4, 1, 7);
  p.const_choice = ConstChoice::Max;
  for (std::uint32_t l = 0; l < 4; ++l) {
    p.index = l;
    EXPECT_EQ(line_column_dropout(seven, p), seven);
  }

  Image nine(3, 3, 1, std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  p.orientation = Orientation::Column;
  p.index = 1;
  auto out = line_column_dropout(nine, p);
  EXPECT_EQ(std::vector<std::uint8_t>(out.samples().begin(), out.samples().end()),
            (std::vector<std::uint8_t>{1, 9, 3, 4, 9, 6, 7, 9, 9}));
}

TEST(LineColumnDropout, IndexOutOfRange) {
  Image img(3, 5, 1);
  auto p = make(DistortionKind::LineColumnDropout);
  p.index = 3;
  EXPECT_EQ(code_of([&] { (void)line_column_dropout(img, p); }), ErrorCode::IndexOutOfRange);
  p.orientation = Orientation::Column;
  EXPECT_NO_THROW((void)line_column_dropout(img, p));
  p.index = 5;
  EXPECT_EQ(code_of([&] { (void)line_column_dropout(img, p); }), ErrorCode::IndexOutOfRange);
}

TEST(LineStripping, Examples) {
  std::mt19937_64 gen(4);
  auto img = mid_image(gen, 4, 5, 3);
  const auto lo = img.min_sample();
  auto p = make(DistortionKind::LineStripping);
  auto row_is = [&](const Image& im, std::uint32_t y, std::uint8_t v) {
    for (std::uint32_t x = 0; x < im.width(); ++x)
      for (std::uint32_t c = 0; c < 3; ++c)
        if (im.at(y, x, c) != v) return false;
    return true;
  };
  auto row_same = [&](const Image& a, std::uint32_t y) {
    for (std::uint32_t x = 0; x < a.width(); ++x)
      for (std::uint32_t c = 0; c < 3; ++c)
        if (a.at(y, x, c) != img.at(y, x, c)) return false;
    return true;
  };

  p.stride = 1;
  auto all = line_stripping(img, p);
  for (std::uint32_t y = 0; y < 4; ++y) EXPECT_TRUE(row_is(all, y, lo));

  p.stride = 9;
  auto first = line_stripping(img, p);
  EXPECT_TRUE(row_is(first, 0, lo));
  for (std::uint32_t y = 1; y < 4; ++y) EXPECT_TRUE(row_same(first, y));

  p.stride = 2;
  auto even = line_stripping(img, p);
  EXPECT_TRUE(row_is(even, 0, lo));
  EXPECT_TRUE(row_same(even, 1));
  EXPECT_TRUE(row_is(even, 2, lo));
  EXPECT_TRUE(row_same(even, 3));

  p.stride = 0;
  EXPECT_EQ(code_of([&] { (void)line_stripping(img, p); }), ErrorCode::InvalidParams);
}

TEST(LineStripping, Columns) {
  Image img(2, 5, 1, std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  auto p = make(DistortionKind::LineStripping);
  p.orientation = Orientation::Column;
  p.stride = 3;
  p.const_choice = ConstChoice::Max;
  auto out = line_stripping(img, p);
  EXPECT_EQ(std::vector<std::uint8_t>(out.samples().begin(), out.samples().end()),
            (std::vector<std::uint8_t>{10, 2, 3, 10, 5, 10, 7, 8, 10, 10}));
}

TEST(SaltPepper, Examples) {
  std::mt19937_64 gen(5);
  auto img = mid_image(gen, 32, 32, 3);
  auto p = make(DistortionKind::SaltPepper);
  EXPECT_EQ(salt_pepper(img, p, 1), img);
  p.p_salt = 0.4;
  p.p_pepper = 0.6;
  auto out = salt_pepper(img, p, 1);
  for (auto v : out.samples()) EXPECT_TRUE(v == img.min_sample() || v == img.max_sample());
  p.p_pepper = 0.7;
  EXPECT_EQ(code_of([&] { (void)salt_pepper(img, p, 1); }), ErrorCode::InvalidParams);
}

TEST(SaltPepper, SaltIsMinimumPepperIsMaximum) {
  Image img(8, 8, 1, 100);
  img.samples()[0] = 10;
  img.samples()[1] = 200;
  auto p = make(DistortionKind::SaltPepper);
  p.p_salt = 1.0;
  const auto salted = salt_pepper(img, p, 3);
  for (auto v : salted.samples()) EXPECT_EQ(v, 10);
  p.p_salt = 0.0;
  p.p_pepper = 1.0;
  const auto peppered = salt_pepper(img, p, 3);
  for (auto v : peppered.samples()) EXPECT_EQ(v, 200);
}

TEST(SaltPepper, AlteredFraction) {
  std::mt19937_64 gen(6);
  auto img = mid_image(gen, 256, 256, 1);
  auto p = make(DistortionKind::SaltPepper);
  p.p_salt = p.p_pepper = 0.1;
  EXPECT_NEAR(altered_fraction(img, salt_pepper(img, p, 12)), 0.2, 0.02);
}

TEST(SpatialGaussian, Examples) {
  std::mt19937_64 gen(7);
  auto img = random_image(gen, 16, 16, 3);
  auto p = make(DistortionKind::SpatialGaussian);
  EXPECT_EQ(spatial_gaussian(img, p, 1), img);
  p.mu = 10;
  EXPECT_EQ(spatial_gaussian(Image(8, 8, 3, 100), p, 1), Image(8, 8, 3, 110));
  p.sigma = -1;
  EXPECT_EQ(code_of([&] { (void)spatial_gaussian(img, p, 1); }), ErrorCode::InvalidParams);
}

TEST(SpatialGaussian, MeanShiftOnMidGray) {
  Image img(256, 256, 1, 128);
  auto p = make(DistortionKind::SpatialGaussian);
  p.sigma = 5;
  auto out = spatial_gaussian(img, p, 21);
  double sum = 0;
  for (std::size_t i = 0; i < img.samples().size(); ++i) sum += double(out.samples()[i]) - 128.0;
  EXPECT_NEAR(sum / img.samples().size(), 0.0, 0.2);
}

TEST(SpatialGaussian, ClampsToByteRange) {
  Image img(32, 32, 1, 250);
  auto p = make(DistortionKind::SpatialGaussian);
  p.mu = 20;
  p.sigma = 25;
  const auto bright = spatial_gaussian(img, p, 2);
  EXPECT_EQ(bright.max_sample(), 255);
  Image dark(32, 32, 1, 3);
  p.mu = -20;
  bool saw_zero = false;
  const auto darker = spatial_gaussian(dark, p, 2);
  for (auto v : darker.samples()) saw_zero |= v == 0;
  EXPECT_TRUE(saw_zero);
}

TEST(ChannelDropout, Examples) {
  Image img(2, 2, 3, 50);
  for (std::size_t i = 0; i < img.samples().size(); i += 3) img.samples()[i] = 5;
  auto p = make(DistortionKind::ChannelDropout);
  EXPECT_EQ(channel_dropout(img, p), img);

  Image px(1, 1, 3, std::vector<std::uint8_t>{10, 20, 30});
  p.channel = 1;
  auto out = channel_dropout(px, p);
  EXPECT_EQ(out, Image(1, 1, 3, std::vector<std::uint8_t>{10, 10, 30}));

  std::mt19937_64 gen(8);
  auto r = random_image(gen, 8, 8, 3);
  p.channel = 2;
  auto d = channel_dropout(r, p);
  for (std::size_t i = 0; i < r.samples().size(); ++i)
    if (i % 3 != 2) EXPECT_EQ(d.samples()[i], r.samples()[i]);
}

TEST(ChannelDropout, NeedsThreeChannels) {
  auto p = make(DistortionKind::ChannelDropout);
  EXPECT_EQ(code_of([&] { (void)channel_dropout(Image(2, 2, 1), p); }), ErrorCode::ChannelMismatch);
  p.channel = 3;
  EXPECT_EQ(code_of([&] { (void)channel_dropout(Image(2, 2, 3), p); }), ErrorCode::ChannelMismatch);
}

TEST(ChannelGaussian, Examples) {
  std::mt19937_64 gen(9);
  auto img = random_image(gen, 16, 16, 3);
  auto p = make(DistortionKind::ChannelGaussian);
  EXPECT_EQ(channel_gaussian(img, p, 3), img);
  p.sigma = 5;
  auto out = channel_gaussian(img, p, 3);
  for (std::size_t i = 0; i < img.samples().size(); ++i)
    if (i % 3 != 0) EXPECT_EQ(out.samples()[i], img.samples()[i]);
  EXPECT_EQ(code_of([&] { (void)channel_gaussian(Image(2, 2, 1), p, 0); }), ErrorCode::ChannelMismatch);
  p.sigma = -2;
  EXPECT_EQ(code_of([&] { (void)channel_gaussian(img, p, 0); }), ErrorCode::InvalidParams);
}

TEST(ChannelGaussian, MeanShift) {
  Image img(256, 256, 3, 128);
  auto p = make(DistortionKind::ChannelGaussian);
  p.mu = 3;
  p.sigma = 1;
  auto out = channel_gaussian(img, p, 5);
  double sum = 0;
  for (std::size_t i = 0; i < out.samples().size(); i += 3) sum += double(out.samples()[i]) - 128.0;
  EXPECT_NEAR(sum / img.pixel_count(), 3.0, 0.2);
}

TEST(ChannelGaussian, PerturbsLikeSpatialGaussianOnItsChannel) {
  Image img(20, 20, 3, 90);
  auto cg = make(DistortionKind::ChannelGaussian);
  cg.channel = 1;
  cg.mu = -2;
  cg.sigma = 6;
  auto sg = cg;
  sg.kind = DistortionKind::SpatialGaussian;
  auto a = channel_gaussian(img, cg, 44);
  auto b = spatial_gaussian(img, sg, 44);
  for (std::size_t i = 1; i < img.samples().size(); i += 3) EXPECT_EQ(a.samples()[i], b.samples()[i]);
}

TEST(Transforms, DeterministicAndShapePreserving) {
  std::mt19937_64 gen(10);
  auto img = random_image(gen, 24, 31, 3);
  std::vector<DistortionParams> all;
  auto rd = make(DistortionKind::RegionDropout);
  rd.p_min = 0.1;
  rd.p_max = 0.05;
  all.push_back(rd);
  auto lc = make(DistortionKind::LineColumnDropout);
  lc.index = 5;
  all.push_back(lc);
  auto ls = make(DistortionKind::LineStripping);
  ls.stride = 4;
  all.push_back(ls);
  auto sp = make(DistortionKind::SaltPepper);
  sp.p_salt = 0.1;
  sp.p_pepper = 0.1;
  all.push_back(sp);
  auto sg = make(DistortionKind::SpatialGaussian);
  sg.sigma = 8;
  all.push_back(sg);
  auto cd = make(DistortionKind::ChannelDropout);
  cd.channel = 2;
  all.push_back(cd);
  auto cg = make(DistortionKind::ChannelGaussian);
  cg.sigma = 8;
  all.push_back(cg);
  for (const auto& p : all) {
    auto a = apply_distortion(img, p, 123);
    auto b = apply_distortion(img, p, 123);
    EXPECT_EQ(a, b) << to_string(p.kind);
    EXPECT_EQ(a.shape(), img.shape());
  }
}

TEST(Transforms, AffectedIndicesRestrictChanges) {
  std::mt19937_64 gen(11);
  auto img = random_image(gen, 16, 16, 3);
  auto p = make(DistortionKind::SpatialGaussian);
  p.sigma = 20;
  p.affected_indices = std::vector<std::uint32_t>{0, 17, 255};
  auto out = apply_distortion(img, p, 8);
  auto full = p;
  full.affected_indices.reset();
  auto unrestricted = apply_distortion(img, full, 8);
  for (std::size_t px = 0; px < img.pixel_count(); ++px) {
    const bool listed = px == 0 || px == 17 || px == 255;
    for (int c = 0; c < 3; ++c) {
      const auto i = px * 3 + c;
      EXPECT_EQ(out.samples()[i], listed ? unrestricted.samples()[i] : img.samples()[i]);
    }
  }
  p.affected_indices = std::vector<std::uint32_t>{256};
  EXPECT_EQ(code_of([&] { (void)apply_distortion(img, p, 8); }), ErrorCode::IndexOutOfRange);
}

TEST(ApplySequence, Examples) {
  std::mt19937_64 gen(12);
  auto img = random_image(gen, 4, 4, 3);
  EXPECT_EQ(apply_sequence(img, {}), img);

  std::vector<SeededDistortion> identities{{make(DistortionKind::SaltPepper), 1},
                                           {make(DistortionKind::SpatialGaussian), 2}};
  EXPECT_EQ(apply_sequence(img, identities), img);

  auto ls = make(DistortionKind::LineStripping);
  ls.stride = 2;
  auto cd = make(DistortionKind::ChannelDropout);
  std::vector<SeededDistortion> seq{{ls, 0}, {cd, 0}};
  // by hand: MIN over the image, rows 0 and 2 set to it, then channel 0 set to the new minimum
  Image manual = img;
  const auto lo = img.min_sample();
  for (std::uint32_t y : {0u, 2u})
    for (std::uint32_t x = 0; x < 4; ++x)
      for (std::uint32_t c = 0; c < 3; ++c) manual.at(y, x, c) = lo;
  const auto lo2 = manual.min_sample();
  for (std::uint32_t y = 0; y < 4; ++y)
    for (std::uint32_t x = 0; x < 4; ++x) manual.at(y, x, 0) = lo2;
  EXPECT_EQ(apply_sequence(img, seq), manual);
}

TEST(ApplySequence, ErrorNamesGene) {
  auto bad = make(DistortionKind::ChannelDropout);
  std::vector<SeededDistortion> seq{{make(DistortionKind::SaltPepper), 0}, {bad, 0}};
  try {
    (void)apply_sequence(Image(2, 2, 1), seq);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChannelMismatch);
    EXPECT_NE(std::string(e.what()).find("gene 1"), std::string::npos);
  }
}

TEST(ParameterBounds, DefaultsAndTextRoundTrip) {
  ParameterBounds b;
  EXPECT_EQ(b.interval(DistortionKind::SaltPepper, NumericParam::PSalt), (Interval{0, 0.15}));
  EXPECT_EQ(b.interval(DistortionKind::SpatialGaussian, NumericParam::Mu), (Interval{-20, 20}));
  EXPECT_EQ(b.interval(DistortionKind::ChannelGaussian, NumericParam::Sigma), (Interval{0, 25}));
  EXPECT_EQ(b.interval(DistortionKind::LineStripping, NumericParam::Stride), (Interval{2, 32}));
  EXPECT_EQ(b.max_affected_fraction(), 0.5);
  EXPECT_EQ(ParameterBounds::from_text(b.to_text()), b);

  auto c = ParameterBounds::from_text("SaltPepper.p_salt.hi = 0.3\nmax_affected_fraction = 0.25\n");
  EXPECT_EQ(c.interval(DistortionKind::SaltPepper, NumericParam::PSalt).hi, 0.3);
  EXPECT_EQ(c.max_affected_fraction(), 0.25);
}

TEST(ParameterBounds, RejectsBadFiles) {
  EXPECT_EQ(code_of([] { (void)ParameterBounds::from_text("SaltPepper.p_salt.hi = 0.3\nSaltPepper.p_salt.lo = 0.5\n"); }),
            ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { (void)ParameterBounds::from_text("SaltPepper.mu.hi = 1\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { (void)ParameterBounds::from_text("nonsense\n"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { (void)ParameterBounds::from_text("max_affected_fraction = 0\n"); }), ErrorCode::InvalidConfig);
}

TEST(ParamViolations, NamesTheParameter) {
  auto p = make(DistortionKind::SaltPepper);
  p.p_salt = 0.9;
  auto v = param_violations(p, Shape{8, 8, 3}, ParameterBounds{});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("p_salt"), std::string::npos);
}
