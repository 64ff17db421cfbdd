#include "segrmt/transforms.hpp"

#include <cmath>

#include "segrmt/error.hpp"
#include "segrmt/kernels.hpp"
#include "segrmt/kvfile.hpp"

namespace segrmt {

namespace {

constexpr std::array<std::string_view, kDistortionKindCount> kKindNames{
    "RegionDropout",   "LineColumnDropout", "LineStripping",  "SaltPepper",
    "SpatialGaussian", "ChannelDropout",    "ChannelGaussian"};

constexpr std::array<std::string_view, 7> kParamNames{"p_min", "p_max", "p_salt", "p_pepper",
                                                      "mu",    "sigma", "stride"};

constexpr NumericParam kRegionParams[] = {NumericParam::PMin, NumericParam::PMax};
constexpr NumericParam kStripParams[] = {NumericParam::Stride};
constexpr NumericParam kSaltParams[] = {NumericParam::PSalt, NumericParam::PPepper};
constexpr NumericParam kGaussParams[] = {NumericParam::Mu, NumericParam::Sigma};

std::size_t idx(DistortionKind k) { return static_cast<std::size_t>(k); }
std::size_t idx(NumericParam p) { return static_cast<std::size_t>(p); }

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::uint8_t const_value(const Image& img, ConstChoice choice) {
  const auto mm = kernels::parallel::min_max(img.samples());
  return choice == ConstChoice::Min ? mm.min : mm.max;
}

void expect_kind(const DistortionParams& p, DistortionKind kind) {
  if (p.kind != kind)
    throw Error(ErrorCode::InvalidParams, "expected " + std::string(to_string(kind)) +
                                              " parameters, got " + std::string(to_string(p.kind)));
}

// Sets every sample of row or column `line` to `value`.
void fill_line(Image& img, Orientation o, std::uint32_t line, std::uint8_t value) {
  const auto c = img.channels();
  if (o == Orientation::Row) {
    for (std::uint32_t x = 0; x < img.width(); ++x)
      for (std::uint32_t ch = 0; ch < c; ++ch) img.at(line, x, ch) = value;
  } else {
    for (std::uint32_t y = 0; y < img.height(); ++y)
      for (std::uint32_t ch = 0; ch < c; ++ch) img.at(y, line, ch) = value;
  }
}

Image restrict_to(const Image& original, Image distorted, const std::vector<std::uint32_t>& keep) {
  Image out = original;
  const auto c = original.channels();
  auto dst = out.samples();
  const auto src = distorted.samples();
  for (auto p : keep)
    for (std::uint32_t ch = 0; ch < c; ++ch) dst[std::size_t{p} * c + ch] = src[std::size_t{p} * c + ch];
  return out;
}

}  // namespace

std::string_view to_string(DistortionKind kind) noexcept { return kKindNames[idx(kind)]; }

std::optional<DistortionKind> parse_distortion_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<DistortionKind>(i);
  return std::nullopt;
}

std::string_view to_string(NumericParam param) noexcept { return kParamNames[idx(param)]; }

std::span<const NumericParam> bounded_params(DistortionKind kind) noexcept {
  switch (kind) {
    case DistortionKind::RegionDropout: return kRegionParams;
    case DistortionKind::LineStripping: return kStripParams;
    case DistortionKind::SaltPepper: return kSaltParams;
    case DistortionKind::SpatialGaussian:
    case DistortionKind::ChannelGaussian: return kGaussParams;
    case DistortionKind::LineColumnDropout:
    case DistortionKind::ChannelDropout: break;
  }
  return {};
}

double get_param(const DistortionParams& p, NumericParam which) noexcept {
  switch (which) {
    case NumericParam::PMin: return p.p_min;
    case NumericParam::PMax: return p.p_max;
    case NumericParam::PSalt: return p.p_salt;
    case NumericParam::PPepper: return p.p_pepper;
    case NumericParam::Mu: return p.mu;
    case NumericParam::Sigma: return p.sigma;
    case NumericParam::Stride: return p.stride;
  }
  return 0.0;
}

void set_param(DistortionParams& p, NumericParam which, double value) noexcept {
  switch (which) {
    case NumericParam::PMin: p.p_min = value; break;
    case NumericParam::PMax: p.p_max = value; break;
    case NumericParam::PSalt: p.p_salt = value; break;
    case NumericParam::PPepper: p.p_pepper = value; break;
    case NumericParam::Mu: p.mu = value; break;
    case NumericParam::Sigma: p.sigma = value; break;
    case NumericParam::Stride: p.stride = static_cast<std::uint32_t>(std::lround(value)); break;
  }
}

ParameterBounds::ParameterBounds() {
  for (auto kind : kAllDistortionKinds) {
    for (auto param : bounded_params(kind)) {
      Interval v{};
      switch (param) {
        case NumericParam::PMin:
        case NumericParam::PMax:
        case NumericParam::PSalt:
        case NumericParam::PPepper: v = {0.0, 0.15}; break;
        case NumericParam::Mu: v = {-20.0, 20.0}; break;
        case NumericParam::Sigma: v = {0.0, 25.0}; break;
        case NumericParam::Stride: v = {2.0, 32.0}; break;
      }
      intervals_[idx(kind)][idx(param)] = v;
    }
  }
}

const Interval& ParameterBounds::interval(DistortionKind kind, NumericParam param) const {
  return intervals_[idx(kind)][idx(param)];
}

void ParameterBounds::set_interval(DistortionKind kind, NumericParam param, Interval value) {
  intervals_[idx(kind)][idx(param)] = value;
}

void ParameterBounds::check() const {
  for (auto kind : kAllDistortionKinds) {
    for (auto param : bounded_params(kind)) {
      const auto& iv = interval(kind, param);
      const std::string name = std::string(to_string(kind)) + "." + std::string(to_string(param));
      if (!(iv.lo <= iv.hi)) throw Error(ErrorCode::InvalidConfig, name + ": lo > hi");
      const bool probability = param == NumericParam::PMin || param == NumericParam::PMax ||
                               param == NumericParam::PSalt || param == NumericParam::PPepper;
      if (probability && (iv.lo < 0.0 || iv.hi > 1.0))
        throw Error(ErrorCode::InvalidConfig, name + ": probabilities must lie in [0,1]");
      if (param == NumericParam::Sigma && iv.lo < 0.0)
        throw Error(ErrorCode::InvalidConfig, name + ": sigma must be non-negative");
      if (param == NumericParam::Stride && iv.lo < 1.0)
        throw Error(ErrorCode::InvalidConfig, name + ": stride must be >= 1");
    }
  }
  if (!(max_affected_fraction_ > 0.0 && max_affected_fraction_ <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "max_affected_fraction must lie in (0,1]");
}

std::string ParameterBounds::to_text() const {
  std::string out = "# Permissible distortion parameter ranges.\n";
  out += "max_affected_fraction = " + format_double(max_affected_fraction_) + "\n";
  for (auto kind : kAllDistortionKinds) {
    for (auto param : bounded_params(kind)) {
      const auto& iv = interval(kind, param);
      const std::string base = std::string(to_string(kind)) + "." + std::string(to_string(param));
      out += base + ".lo = " + format_double(iv.lo) + "\n";
      out += base + ".hi = " + format_double(iv.hi) + "\n";
    }
  }
  return out;
}

ParameterBounds ParameterBounds::from_text(std::string_view text) {
  const auto kv = KeyValueFile::parse(text, ErrorCode::InvalidConfig);
  ParameterBounds out;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "max_affected_fraction") {
      out.max_affected_fraction_ = parse_double(key, value, ErrorCode::InvalidConfig);
      continue;
    }
    // Kind.param.lo|hi
    const auto first = key.find('.');
    const auto last = key.rfind('.');
    std::optional<DistortionKind> kind;
    if (first != std::string::npos && last > first) kind = parse_distortion_kind(key.substr(0, first));
    bool matched = false;
    if (kind) {
      const std::string pname = key.substr(first + 1, last - first - 1);
      const std::string end = key.substr(last + 1);
      for (auto param : bounded_params(*kind)) {
        if (to_string(param) != pname || (end != "lo" && end != "hi")) continue;
        auto iv = out.interval(*kind, param);
        (end == "lo" ? iv.lo : iv.hi) = parse_double(key, value, ErrorCode::InvalidConfig);
        out.set_interval(*kind, param, iv);
        matched = true;
      }
    }
    if (!matched) throw Error(ErrorCode::InvalidConfig, "unknown bounds key '" + key + "'");
  }
  out.check();
  return out;
}

ParameterBounds ParameterBounds::load(const std::filesystem::path& path) {
  const auto kv = KeyValueFile::load(path, ErrorCode::InvalidConfig);
  return from_text(kv.to_text());
}

std::vector<std::string> param_violations(const DistortionParams& p, const Shape& shape,
                                          const ParameterBounds& bounds) {
  std::vector<std::string> out;
  try {
    check_applicable(p, shape);
  } catch (const Error& e) {
    out.push_back(e.detail());
  }
  for (auto param : bounded_params(p.kind)) {
    const double v = get_param(p, param);
    const auto& iv = bounds.interval(p.kind, param);
    if (!iv.contains(v))
      out.push_back(std::string(to_string(p.kind)) + "." + std::string(to_string(param)) + "=" +
                    format_double(v) + " outside [" + format_double(iv.lo) + ", " +
                    format_double(iv.hi) + "]");
  }
  if (p.affected_indices) {
    const double limit = bounds.max_affected_fraction() * static_cast<double>(shape.pixels());
    if (static_cast<double>(p.affected_indices->size()) > limit)
      out.push_back("affected_indices: " + std::to_string(p.affected_indices->size()) +
                    " pixels exceeds max_affected_fraction " +
                    format_double(bounds.max_affected_fraction()));
  }
  return out;
}

void check_applicable(const DistortionParams& p, const Shape& shape) {
  const std::string name(to_string(p.kind));
  switch (p.kind) {
    case DistortionKind::RegionDropout:
      if (!is_probability(p.p_min) || !is_probability(p.p_max) || p.p_min + p.p_max > 1.0)
        throw Error(ErrorCode::InvalidParams, name + ": need p_min, p_max in [0,1] with p_min + p_max <= 1");
      break;
    case DistortionKind::LineColumnDropout: {
      const auto limit = p.orientation == Orientation::Row ? shape.height : shape.width;
      if (p.index >= limit)
        throw Error(ErrorCode::IndexOutOfRange, name + ": index " + std::to_string(p.index) +
                                                    " not below " + std::to_string(limit));
      break;
    }
    case DistortionKind::LineStripping:
      if (p.stride == 0) throw Error(ErrorCode::InvalidParams, name + ": stride must be >= 1");
      break;
    case DistortionKind::SaltPepper:
      if (!is_probability(p.p_salt) || !is_probability(p.p_pepper) || p.p_salt + p.p_pepper > 1.0)
        throw Error(ErrorCode::InvalidParams, name + ": need p_salt, p_pepper in [0,1] with sum <= 1");
      break;
    case DistortionKind::SpatialGaussian:
    case DistortionKind::ChannelGaussian:
      if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma) || !std::isfinite(p.mu))
        throw Error(ErrorCode::InvalidParams, name + ": sigma must be finite and >= 0");
      break;
    case DistortionKind::ChannelDropout: break;
  }
  if (is_channel_kind(p.kind)) {
    if (shape.channels != 3)
      throw Error(ErrorCode::ChannelMismatch, name + " requires a 3-channel image");
    if (p.channel >= shape.channels)
      throw Error(ErrorCode::ChannelMismatch, name + ": channel " + std::to_string(p.channel) + " out of range");
  }
  if (p.affected_indices) {
    for (auto i : *p.affected_indices)
      if (i >= shape.pixels())
        throw Error(ErrorCode::IndexOutOfRange, name + ": affected index " + std::to_string(i) +
                                                    " beyond pixel count " + std::to_string(shape.pixels()));
  }
}

Image region_dropout(const Image& img, const DistortionParams& p, std::uint64_t seed) {
  expect_kind(p, DistortionKind::RegionDropout);
  check_applicable(p, img.shape());
  Image out = img;
  const auto mm = kernels::parallel::min_max(img.samples());
  kernels::parallel::bernoulli_replace(out.samples(), img.channels(), p.p_min, p.p_max, mm.min,
                                       mm.max, seed);
  return out;
}

Image line_column_dropout(const Image& img, const DistortionParams& p) {
  expect_kind(p, DistortionKind::LineColumnDropout);
  check_applicable(p, img.shape());
  Image out = img;
  fill_line(out, p.orientation, p.index, const_value(img, p.const_choice));
  return out;
}

Image line_stripping(const Image& img, const DistortionParams& p) {
  expect_kind(p, DistortionKind::LineStripping);
  check_applicable(p, img.shape());
  Image out = img;
  const auto value = const_value(img, p.const_choice);
  const auto lines = p.orientation == Orientation::Row ? img.height() : img.width();
  for (std::uint32_t x = 0; x < lines; x += p.stride) fill_line(out, p.orientation, x, value);
  return out;
}

Image salt_pepper(const Image& img, const DistortionParams& p, std::uint64_t seed) {
  expect_kind(p, DistortionKind::SaltPepper);
  check_applicable(p, img.shape());
  Image out = img;
  const auto mm = kernels::parallel::min_max(img.samples());
  kernels::parallel::bernoulli_replace(out.samples(), img.channels(), p.p_salt, p.p_pepper, mm.min,
                                       mm.max, seed);
  return out;
}

Image spatial_gaussian(const Image& img, const DistortionParams& p, std::uint64_t seed) {
  expect_kind(p, DistortionKind::SpatialGaussian);
  check_applicable(p, img.shape());
  Image out = img;
  kernels::parallel::add_gaussian(out.samples(), img.channels(), -1, p.mu, p.sigma, seed);
  return out;
}

Image channel_dropout(const Image& img, const DistortionParams& p) {
  expect_kind(p, DistortionKind::ChannelDropout);
  check_applicable(p, img.shape());
  Image out = img;
  const auto value = const_value(img, p.const_choice);
  auto s = out.samples();
  for (std::size_t i = p.channel; i < s.size(); i += 3) s[i] = value;
  return out;
}

Image channel_gaussian(const Image& img, const DistortionParams& p, std::uint64_t seed) {
  expect_kind(p, DistortionKind::ChannelGaussian);
  check_applicable(p, img.shape());
  Image out = img;
  kernels::parallel::add_gaussian(out.samples(), 3, static_cast<int>(p.channel), p.mu, p.sigma, seed);
  return out;
}

Image apply_distortion(const Image& img, const DistortionParams& p, std::uint64_t seed) {
  Image out;
  switch (p.kind) {
    case DistortionKind::RegionDropout: out = region_dropout(img, p, seed); break;
    case DistortionKind::LineColumnDropout: out = line_column_dropout(img, p); break;
    case DistortionKind::LineStripping: out = line_stripping(img, p); break;
    case DistortionKind::SaltPepper: out = salt_pepper(img, p, seed); break;
    case DistortionKind::SpatialGaussian: out = spatial_gaussian(img, p, seed); break;
    case DistortionKind::ChannelDropout: out = channel_dropout(img, p); break;
    case DistortionKind::ChannelGaussian: out = channel_gaussian(img, p, seed); break;
  }
  if (p.affected_indices) return restrict_to(img, std::move(out), *p.affected_indices);
  return out;
}

Image apply_sequence(const Image& img, std::span<const SeededDistortion> genes) {
  Image current = img;
  for (std::size_t i = 0; i < genes.size(); ++i) {
    try {
      current = apply_distortion(current, genes[i].params, genes[i].seed);
    } catch (const Error& e) {
      throw Error(e.code(), "gene " + std::to_string(i) + ": " + e.detail());
    }
  }
  return current;
}

}  // namespace segrmt
