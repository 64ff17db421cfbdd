#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace segrmt::stats {

struct PairedSamples {
  std::vector<double> a;
  std::vector<double> b;
  std::string label_a = "a";
  std::string label_b = "b";
};

enum class WilcoxonMode { Exact, NormalApproximation };
std::string_view to_string(WilcoxonMode mode) noexcept;

/// Auto picks Exact up to kExactLimit non-zero differences.
enum class ModePolicy { Auto, Exact, Normal };
inline constexpr std::size_t kExactLimit = 25;

struct WilcoxonResult {
  /// Sum of the ranks of positive differences a − b.
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_effective = 0;
  WilcoxonMode mode = WilcoxonMode::Exact;
};

/// Two-sided signed-rank test. Zero differences are dropped, ties get average
/// ranks. Throws LengthMismatch, EmptySet, InvalidParams (non-finite values),
/// AllZeroDifferences, and InvalidParams when Exact is forced past kExactLimit.
WilcoxonResult wilcoxon_signed_rank(const PairedSamples& s, ModePolicy policy = ModePolicy::Auto);

struct CohensDResult {
  double d = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double sd_a = 0.0;
  double sd_b = 0.0;
  double pooled_sd = 0.0;
};

/// (mean_a − mean_b) / pooled sd, sample variances with n − 1.
/// Throws TooFewSamples when a group has fewer than 2 values, DegenerateVariance on zero pooled sd.
CohensDResult cohens_d(std::span<const double> a, std::span<const double> b);

struct Summary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  /// Sample sd (n − 1); 0 for a single value.
  double sd = 0.0;
  std::size_t count = 0;
};

/// Type-7 quantile: linear interpolation between order statistics at h = (n − 1)·q.
double quantile(std::span<const double> sorted, double q);

/// Throws EmptySet.
Summary summarize_distribution(std::span<const double> samples);

inline constexpr const char* kQuantileMethod = "linear-interpolation (type 7)";

struct Comparison {
  std::string method_a;
  std::string method_b;
  /// Absent when every difference was zero.
  std::optional<WilcoxonResult> wilcoxon;
  std::string note;
};

/// method_a,method_b,statistic,p_value,mode,n_effective
void write_comparison_csv(std::ostream& out, std::span<const Comparison> rows);

struct ViolinRow {
  std::string method;
  std::string image;
  double iou = 0.0;
};
/// method,image,iou
void write_violin_csv(std::ostream& out, std::span<const ViolinRow> rows);

}  // namespace segrmt::stats
