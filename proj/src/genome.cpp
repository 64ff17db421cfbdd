#include "segrmt/genome.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "segrmt/error.hpp"

namespace segrmt {

namespace {

enum Tag : std::uint8_t {
  kTagPMin = 0x01,
  kTagPMax = 0x02,
  kTagOrientation = 0x03,
  kTagIndex = 0x04,
  kTagConstChoice = 0x05,
  kTagStride = 0x06,
  kTagPSalt = 0x07,
  kTagPPepper = 0x08,
  kTagMu = 0x09,
  kTagSigma = 0x0A,
  kTagChannel = 0x0B,
  kTagAffected = 0x0C,
};

bool uses(DistortionKind kind, Tag tag) {
  switch (kind) {
    case DistortionKind::RegionDropout: return tag == kTagPMin || tag == kTagPMax;
    case DistortionKind::LineColumnDropout:
      return tag == kTagOrientation || tag == kTagIndex || tag == kTagConstChoice;
    case DistortionKind::LineStripping:
      return tag == kTagStride || tag == kTagOrientation || tag == kTagConstChoice;
    case DistortionKind::SaltPepper: return tag == kTagPSalt || tag == kTagPPepper;
    case DistortionKind::SpatialGaussian: return tag == kTagMu || tag == kTagSigma;
    case DistortionKind::ChannelDropout: return tag == kTagChannel || tag == kTagConstChoice;
    case DistortionKind::ChannelGaussian:
      return tag == kTagChannel || tag == kTagMu || tag == kTagSigma;
  }
  return false;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  [[nodiscard]] std::size_t offset() const noexcept { return pos_; }
  [[nodiscard]] bool done() const noexcept { return pos_ == bytes_.size(); }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  [[noreturn]] void fail(const std::string& why, std::size_t at) const {
    throw Error(ErrorCode::MalformedPayload, why + " at byte offset " + std::to_string(at));
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      fail(std::string("truncated payload reading ") + what, pos_);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void GenomeConfig::check() const {
  if (min_genes < 1 || min_genes > max_genes)
    throw Error(ErrorCode::InvalidConfig, "need 1 <= min_genes <= max_genes");
  for (double w : kind_weights)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::InvalidConfig, "kind weights must be finite and non-negative");
  if (!(activation_probability >= 0.0 && activation_probability <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "activation_probability must lie in [0,1]");
  if (target_shape.height == 0 || target_shape.width == 0 ||
      (target_shape.channels != 1 && target_shape.channels != 3))
    throw Error(ErrorCode::InvalidConfig, "target shape must be HxWx1 or HxWx3 with H,W >= 1");
  bounds.check();
  if (drawable_kinds(*this).empty())
    throw Error(ErrorCode::InvalidConfig, "no distortion kind has positive weight for this image");
}

std::vector<DistortionKind> drawable_kinds(const GenomeConfig& cfg) {
  std::vector<DistortionKind> out;
  for (auto kind : kAllDistortionKinds) {
    if (cfg.kind_weights[static_cast<std::size_t>(kind)] <= 0.0) continue;
    if (is_channel_kind(kind) && cfg.target_shape.channels != 3) continue;
    out.push_back(kind);
  }
  return out;
}

DistortionKind draw_kind(const GenomeConfig& cfg, Rng& rng) {
  const auto kinds = drawable_kinds(cfg);
  if (kinds.empty()) throw Error(ErrorCode::InvalidConfig, "no drawable distortion kind");
  double total = 0.0;
  for (auto k : kinds) total += cfg.kind_weights[static_cast<std::size_t>(k)];
  double u = rng.uniform() * total;
  for (auto k : kinds) {
    u -= cfg.kind_weights[static_cast<std::size_t>(k)];
    if (u < 0.0) return k;
  }
  return kinds.back();
}

DistortionParams random_params(DistortionKind kind, const GenomeConfig& cfg, Rng& rng) {
  DistortionParams p;
  p.kind = kind;
  const auto& shape = cfg.target_shape;
  auto draw = [&](NumericParam which) {
    const auto& iv = cfg.bounds.interval(kind, which);
    return rng.uniform(iv.lo, iv.hi);
  };
  switch (kind) {
    case DistortionKind::RegionDropout: {
      p.p_min = draw(NumericParam::PMin);
      const auto& iv = cfg.bounds.interval(kind, NumericParam::PMax);
      p.p_max = rng.uniform(iv.lo, std::max(iv.lo, std::min(iv.hi, 1.0 - p.p_min)));
      p.p_max = std::min(p.p_max, 1.0 - p.p_min);
      break;
    }
    case DistortionKind::SaltPepper: {
      p.p_salt = draw(NumericParam::PSalt);
      const auto& iv = cfg.bounds.interval(kind, NumericParam::PPepper);
      p.p_pepper = rng.uniform(iv.lo, std::max(iv.lo, std::min(iv.hi, 1.0 - p.p_salt)));
      p.p_pepper = std::min(p.p_pepper, 1.0 - p.p_salt);
      break;
    }
    case DistortionKind::LineColumnDropout: {
      p.orientation = rng.bernoulli(0.5) ? Orientation::Column : Orientation::Row;
      const auto limit = p.orientation == Orientation::Row ? shape.height : shape.width;
      p.index = static_cast<std::uint32_t>(rng.uniform_int(0, std::int64_t{limit} - 1));
      p.const_choice = rng.bernoulli(0.5) ? ConstChoice::Max : ConstChoice::Min;
      break;
    }
    case DistortionKind::LineStripping: {
      const auto& iv = cfg.bounds.interval(kind, NumericParam::Stride);
      const auto lo = static_cast<std::int64_t>(std::ceil(iv.lo));
      const auto hi = static_cast<std::int64_t>(std::floor(iv.hi));
      p.stride = static_cast<std::uint32_t>(rng.uniform_int(lo, std::max(lo, hi)));
      p.orientation = rng.bernoulli(0.5) ? Orientation::Column : Orientation::Row;
      p.const_choice = rng.bernoulli(0.5) ? ConstChoice::Max : ConstChoice::Min;
      break;
    }
    case DistortionKind::SpatialGaussian:
      p.mu = draw(NumericParam::Mu);
      p.sigma = draw(NumericParam::Sigma);
      break;
    case DistortionKind::ChannelDropout:
      p.channel = static_cast<std::uint32_t>(rng.uniform_int(0, 2));
      p.const_choice = rng.bernoulli(0.5) ? ConstChoice::Max : ConstChoice::Min;
      break;
    case DistortionKind::ChannelGaussian:
      p.channel = static_cast<std::uint32_t>(rng.uniform_int(0, 2));
      p.mu = draw(NumericParam::Mu);
      p.sigma = draw(NumericParam::Sigma);
      break;
  }
  return p;
}

SubTransform random_gene(const GenomeConfig& cfg, Rng& rng) {
  SubTransform gene;
  gene.active = rng.bernoulli(cfg.activation_probability);
  gene.params = random_params(draw_kind(cfg, rng), cfg, rng);
  gene.seed = rng.next_u64();
  return gene;
}

Chromosome random_chromosome(const GenomeConfig& cfg, std::uint64_t seed) {
  cfg.check();
  Rng rng(seed);
  const auto count = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(cfg.min_genes), static_cast<std::int64_t>(cfg.max_genes)));
  Chromosome ch;
  ch.genes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ch.genes.push_back(random_gene(cfg, rng));
  return ch;
}

std::vector<Violation> validate(const Chromosome& ch, const GenomeConfig& cfg, const Shape& image_shape) {
  std::vector<Violation> out;
  const auto n = ch.genes.size();
  if (n < cfg.min_genes || n > cfg.max_genes)
    out.push_back({std::nullopt, "length " + std::to_string(n) + " outside [" +
                                     std::to_string(cfg.min_genes) + ", " +
                                     std::to_string(cfg.max_genes) + "]"});
  for (std::size_t i = 0; i < n; ++i)
    for (auto& why : param_violations(ch.genes[i].params, image_shape, cfg.bounds))
      out.push_back({i, std::move(why)});
  return out;
}

std::vector<SeededDistortion> to_transform_sequence(const Chromosome& ch) {
  std::vector<SeededDistortion> out;
  for (const auto& g : ch.genes)
    if (g.active) out.push_back({g.params, g.seed});
  return out;
}

std::vector<std::uint8_t> encode(const Chromosome& ch) {
  const DistortionParams defaults;
  Writer w;
  for (auto b : kChromosomeMagic) w.u8(b);
  w.u8(kChromosomeVersion);
  w.u32(static_cast<std::uint32_t>(ch.genes.size()));
  for (const auto& g : ch.genes) {
    const auto& p = g.params;
    w.u8(static_cast<std::uint8_t>(p.kind));
    w.u8(g.active ? 1 : 0);
    w.u64(g.seed);

    // A field is written when the kind uses it or when it differs from the
    // default, so decode(encode(x)) == x for every value.
    std::vector<Tag> tags;
    auto want = [&](Tag t, bool differs) {
      if (uses(p.kind, t) || differs) tags.push_back(t);
    };
    want(kTagPMin, p.p_min != defaults.p_min);
    want(kTagPMax, p.p_max != defaults.p_max);
    want(kTagOrientation, p.orientation != defaults.orientation);
    want(kTagIndex, p.index != defaults.index);
    want(kTagConstChoice, p.const_choice != defaults.const_choice);
    want(kTagStride, p.stride != defaults.stride);
    want(kTagPSalt, p.p_salt != defaults.p_salt);
    want(kTagPPepper, p.p_pepper != defaults.p_pepper);
    want(kTagMu, p.mu != defaults.mu);
    want(kTagSigma, p.sigma != defaults.sigma);
    want(kTagChannel, p.channel != defaults.channel);
    if (p.affected_indices) tags.push_back(kTagAffected);

    w.u8(static_cast<std::uint8_t>(tags.size()));
    for (auto t : tags) {
      w.u8(t);
      switch (t) {
        case kTagPMin: w.f64(p.p_min); break;
        case kTagPMax: w.f64(p.p_max); break;
        case kTagOrientation: w.u8(static_cast<std::uint8_t>(p.orientation)); break;
        case kTagIndex: w.u32(p.index); break;
        case kTagConstChoice: w.u8(static_cast<std::uint8_t>(p.const_choice)); break;
        case kTagStride: w.u32(p.stride); break;
        case kTagPSalt: w.f64(p.p_salt); break;
        case kTagPPepper: w.f64(p.p_pepper); break;
        case kTagMu: w.f64(p.mu); break;
        case kTagSigma: w.f64(p.sigma); break;
        case kTagChannel: w.u8(static_cast<std::uint8_t>(p.channel)); break;
        case kTagAffected:
          w.u32(static_cast<std::uint32_t>(p.affected_indices->size()));
          for (auto i : *p.affected_indices) w.u32(i);
          break;
      }
    }
  }
  return w.take();
}

Chromosome decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (std::size_t i = 0; i < kChromosomeMagic.size(); ++i) {
    const auto at = r.offset();
    if (r.u8("magic") != kChromosomeMagic[i]) r.fail("bad magic", at);
  }
  {
    const auto at = r.offset();
    const auto version = r.u8("version");
    if (version != kChromosomeVersion)
      r.fail("unknown version " + std::to_string(version), at);
  }
  const auto count = r.u32("gene count");
  Chromosome ch;
  // Each gene needs at least 11 bytes; reject absurd counts before reserving.
  if (count > bytes.size() / 11) r.fail("gene count " + std::to_string(count) + " exceeds payload", 5);
  ch.genes.reserve(count);
  for (std::uint32_t gi = 0; gi < count; ++gi) {
    SubTransform g;
    auto at = r.offset();
    const auto kind = r.u8("kind");
    if (kind >= kDistortionKindCount) r.fail("unknown distortion kind " + std::to_string(kind), at);
    g.params.kind = static_cast<DistortionKind>(kind);
    at = r.offset();
    const auto active = r.u8("activation bit");
    if (active > 1) r.fail("activation bit must be 0 or 1", at);
    g.active = active == 1;
    g.seed = r.u64("seed");
    const auto fields = r.u8("field count");
    std::uint32_t seen = 0;
    for (std::uint8_t f = 0; f < fields; ++f) {
      at = r.offset();
      const auto tag = r.u8("field tag");
      if (tag < kTagPMin || tag > kTagAffected) r.fail("unknown field tag " + std::to_string(tag), at);
      if (seen & (1u << tag)) r.fail("duplicate field tag " + std::to_string(tag), at);
      seen |= 1u << tag;
      auto& p = g.params;
      switch (static_cast<Tag>(tag)) {
        case kTagPMin: p.p_min = r.f64("p_min"); break;
        case kTagPMax: p.p_max = r.f64("p_max"); break;
        case kTagOrientation: {
          at = r.offset();
          const auto v = r.u8("orientation");
          if (v > 1) r.fail("orientation must be 0 or 1", at);
          p.orientation = static_cast<Orientation>(v);
          break;
        }
        case kTagIndex: p.index = r.u32("index"); break;
        case kTagConstChoice: {
          at = r.offset();
          const auto v = r.u8("const choice");
          if (v > 1) r.fail("const choice must be 0 or 1", at);
          p.const_choice = static_cast<ConstChoice>(v);
          break;
        }
        case kTagStride: p.stride = r.u32("stride"); break;
        case kTagPSalt: p.p_salt = r.f64("p_salt"); break;
        case kTagPPepper: p.p_pepper = r.f64("p_pepper"); break;
        case kTagMu: p.mu = r.f64("mu"); break;
        case kTagSigma: p.sigma = r.f64("sigma"); break;
        case kTagChannel: p.channel = r.u8("channel"); break;
        case kTagAffected: {
          at = r.offset();
          const auto n = r.u32("affected count");
          if (n > (bytes.size() - r.offset()) / 4) r.fail("affected count exceeds payload", at);
          std::vector<std::uint32_t> idx(n);
          for (auto& v : idx) v = r.u32("affected index");
          p.affected_indices = std::move(idx);
          break;
        }
      }
    }
    ch.genes.push_back(std::move(g));
  }
  if (!r.done()) r.fail("trailing bytes", r.offset());
  return ch;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(std::string_view text) {
  if (text.size() % 2 != 0) throw Error(ErrorCode::MalformedPayload, "odd-length hex payload");
  auto nibble = [&](char c, std::size_t at) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw Error(ErrorCode::MalformedPayload, "non-hex character at offset " + std::to_string(at));
  };
  std::vector<std::uint8_t> out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(text[2 * i], 2 * i) << 4 | nibble(text[2 * i + 1], 2 * i + 1));
  return out;
}

}  // namespace segrmt
