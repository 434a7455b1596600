#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace probecount {

enum class metric { mae, median_ae, std_ae, rmse, r2 };

inline constexpr std::array<metric, 5> kAllMetrics{metric::mae, metric::median_ae,
                                                   metric::std_ae, metric::rmse, metric::r2};

std::string_view to_string(metric);

/// Lower is better for every metric except r2.
constexpr bool higher_is_better(metric m) { return m == metric::r2; }

struct metric_bundle {
  double mae{0.0};
  double median_ae{0.0};
  double std_ae{0.0};  // population form
  double rmse{0.0};
  std::optional<double> r2;  // nullopt when the truth vector is constant

  std::optional<double> get(metric) const;

  friend bool operator==(metric_bundle const&, metric_bundle const&) = default;
};

/// Absolute-error statistics and R2 of `estimate` against `truth`. Throws
/// usage_error on empty or mismatched inputs.
metric_bundle compute_metrics(std::span<double const> truth, std::span<double const> estimate);

enum class rank_method { exact, normal_approx };

struct rank_test_result {
  double statistic_w{0.0};  // min(W+, W-)
  double p_value{1.0};      // two-sided
  std::size_t n_effective{0};
  rank_method method{rank_method::exact};
};

/// Largest n_effective for which the exact null distribution is used.
inline constexpr std::size_t kWilcoxonExactMax = 20;

/// Paired Wilcoxon signed-rank test on d = a - b. Zero differences are
/// dropped, tied |d| get mid-ranks. Exact two-sided p when n_effective <=
/// kWilcoxonExactMax, otherwise the normal approximation with tie-corrected
/// variance, continuity correction and a fourth-cumulant Edgeworth term.
/// `force` overrides the choice.
rank_test_result wilcoxon_signed_rank(std::span<double const> a, std::span<double const> b,
                                      std::optional<rank_method> force = std::nullopt);

struct mean_ci {
  double lower{0.0};
  double upper{0.0};
  double mean{0.0};
  double std{0.0};  // sample form
  std::size_t count{0};
};

/// Student-t 95% interval for the mean. Throws usage_error when fewer than
/// two samples are given.
mean_ci mean_ci95(std::span<double const> samples);

/// Quantile of Student's t distribution.
double student_t_quantile(double p, double degrees_of_freedom);

}  // namespace probecount
