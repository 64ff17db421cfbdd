#include "segrmt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "segrmt/error.hpp"
#include "segrmt/kvfile.hpp"

namespace segrmt::stats {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

// Doubled average ranks of |d|, so ties stay integral.
std::vector<std::uint32_t> doubled_ranks(const std::vector<double>& magnitudes, std::vector<std::size_t>& tie_sizes) {
  const std::size_t n = magnitudes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return magnitudes[x] < magnitudes[y]; });
  std::vector<std::uint32_t> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && magnitudes[order[j + 1]] == magnitudes[order[i]]) ++j;
    // positions i..j hold ranks i+1..j+1; doubled average is i+j+2
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = static_cast<std::uint32_t>(i + j + 2);
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }
  return ranks;
}

double exact_p(const std::vector<std::uint32_t>& ranks, std::uint64_t w2) {
  std::uint64_t total = 0;
  for (auto r : ranks) total += r;
  std::vector<std::uint64_t> counts(total + 1, 0);
  counts[0] = 1;
  std::uint64_t reach = 0;
  for (auto r : ranks) {
    for (std::uint64_t s = reach + 1; s-- > 0;)
      if (counts[s]) counts[s + r] += counts[s];
    reach += r;
  }
  std::uint64_t le = 0, ge = 0;
  for (std::uint64_t s = 0; s <= total; ++s) {
    if (s <= w2) le += counts[s];
    if (s >= w2) ge += counts[s];
  }
  const double all = std::ldexp(1.0, static_cast<int>(ranks.size()));
  return std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / all);
}

double normal_p(double w, std::size_t n, const std::vector<std::size_t>& tie_sizes) {
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  for (auto t : tie_sizes) {
    const double tt = static_cast<double>(t);
    var -= (tt * tt * tt - tt) / 48.0;
  }
  const double z = std::max(std::abs(w - mean) - 0.5, 0.0) / std::sqrt(var);
  const double p = std::erfc(z / std::sqrt(2.0));
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string_view to_string(WilcoxonMode mode) noexcept {
  return mode == WilcoxonMode::Exact ? "exact" : "normal_approximation";
}

WilcoxonResult wilcoxon_signed_rank(const PairedSamples& s, ModePolicy policy) {
  if (s.a.size() != s.b.size())
    throw Error(ErrorCode::LengthMismatch,
                "paired samples have lengths " + std::to_string(s.a.size()) + " and " + std::to_string(s.b.size()));
  if (s.a.empty()) throw Error(ErrorCode::EmptySet, "no paired samples");

  std::vector<double> magnitudes;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < s.a.size(); ++i) {
    if (!std::isfinite(s.a[i]) || !std::isfinite(s.b[i]))
      throw Error(ErrorCode::InvalidParams, "non-finite sample at position " + std::to_string(i));
    const double d = s.a[i] - s.b[i];
    if (d == 0.0) continue;
    magnitudes.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  if (magnitudes.empty()) throw Error(ErrorCode::AllZeroDifferences, "every paired difference is zero");

  const std::size_t n = magnitudes.size();
  WilcoxonMode mode = WilcoxonMode::Exact;
  if (policy == ModePolicy::Normal || (policy == ModePolicy::Auto && n > kExactLimit))
    mode = WilcoxonMode::NormalApproximation;
  if (policy == ModePolicy::Exact && n > kExactLimit)
    throw Error(ErrorCode::InvalidParams, "exact enumeration is limited to " + std::to_string(kExactLimit) +
                                              " differences, got " + std::to_string(n));

  std::vector<std::size_t> tie_sizes;
  const auto ranks = doubled_ranks(magnitudes, tie_sizes);
  std::uint64_t w2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (positive[i]) w2 += ranks[i];

  WilcoxonResult r;
  r.statistic = static_cast<double>(w2) / 2.0;
  r.n_effective = n;
  r.mode = mode;
  r.p_value = mode == WilcoxonMode::Exact ? exact_p(ranks, w2) : normal_p(r.statistic, n, tie_sizes);
  return r;
}

CohensDResult cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw Error(ErrorCode::TooFewSamples, "each group needs at least 2 values, got " + std::to_string(a.size()) +
                                              " and " + std::to_string(b.size()));
  CohensDResult r;
  r.mean_a = mean_of(a);
  r.mean_b = mean_of(b);
  const double va = sample_variance(a, r.mean_a);
  const double vb = sample_variance(b, r.mean_b);
  r.sd_a = std::sqrt(va);
  r.sd_b = std::sqrt(vb);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  r.pooled_sd = std::sqrt(((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0));
  if (!(r.pooled_sd > 0.0)) throw Error(ErrorCode::DegenerateVariance, "pooled standard deviation is zero");
  r.d = (r.mean_a - r.mean_b) / r.pooled_sd;
  return r;
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::EmptySet, "quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize_distribution(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptySet, "cannot summarize an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParams, "non-finite sample");
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.count = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);
  s.mean = mean_of(sorted);
  s.sd = std::sqrt(sample_variance(sorted, s.mean));
  return s;
}

void write_comparison_csv(std::ostream& out, std::span<const Comparison> rows) {
  out << "method_a,method_b,statistic,p_value,mode,n_effective\n";
  for (const auto& row : rows) {
    out << csv_field(row.method_a) << ',' << csv_field(row.method_b) << ',';
    if (row.wilcoxon) {
      const auto& w = *row.wilcoxon;
      out << format_double(w.statistic) << ',' << format_double(w.p_value) << ',' << to_string(w.mode) << ','
          << w.n_effective << '\n';
    } else {
      out << ",,all_zero_differences,0\n";
    }
  }
}

void write_violin_csv(std::ostream& out, std::span<const ViolinRow> rows) {
  out << "method,image,iou\n";
  for (const auto& row : rows)
    out << csv_field(row.method) << ',' << csv_field(row.image) << ',' << format_double(row.iou) << '\n';
}

}  // namespace segrmt::stats
