#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "embeff/metrics.hpp"

namespace embeff {

inline constexpr std::array<const char*, 5> kMetricNames = {
    "tau", "L_ee", "L_joint", "J", "R"};

double metric_component(const MetricVector& m, std::size_t idx);

/// One baseline-normalized comparison row. The five metrics normalize
/// multiplicatively (baseline = 100); SR compares additively in points.
struct NormalizedRow {
  std::string suite_id;
  std::string run_tag;
  // Per metric, in kMetricNames order; absent when the baseline value is 0
  // or the baseline means are undefined.
  std::array<std::optional<double>, 5> normalized;  // 100 * variant / baseline
  std::array<std::optional<double>, 5> raw;         // variant mean
  std::array<std::optional<double>, 5> raw_baseline;
  double sr_baseline = 0.0;
  double sr_variant = 0.0;
  double sr_delta_points() const { return 100.0 * (sr_variant - sr_baseline); }
  // For aggregated rows: how many suites contributed per metric.
  std::array<std::size_t, 5> suites_counted{};
  std::size_t suites_total = 1;
};

NormalizedRow normalize_to_baseline(const SuiteSummary& baseline,
                                    const SuiteSummary& variant);

// Unweighted mean of per-suite normalized percentages; metrics undefined in
// some suites are averaged over the defined ones and flagged via
// suites_counted < suites_total.
NormalizedRow aggregate_over_suites(const std::vector<NormalizedRow>& rows);

// Display rounding: one decimal, round half away from zero.
std::string fmt_one_decimal(double v);
std::string fmt_signed_one_decimal(double v);

// "128.0 (+28.0)" — normalized value with point delta.
std::string fmt_norm_cell(const std::optional<double>& normalized);
// "1973.1 (+28.0%)" — raw mean with percent delta.
std::string fmt_raw_cell(const std::optional<double>& raw,
                         const std::optional<double>& normalized);
// "91.2 (-3.8)" — SR with point delta.
std::string fmt_sr_cell(double sr_variant, double delta_points);

}  // namespace embeff
