#include "embeff/normalize.hpp"

#include <cmath>

#include "embeff/errors.hpp"

namespace embeff {

double metric_component(const MetricVector& m, std::size_t idx) {
  switch (idx) {
    case 0: return m.tau;
    case 1: return m.L_ee;
    case 2: return m.L_joint;
    case 3: return m.J;
    case 4: return m.R;
    default: throw ConfigError("metric index out of range");
  }
}

NormalizedRow normalize_to_baseline(const SuiteSummary& baseline,
                                    const SuiteSummary& variant) {
  NormalizedRow row;
  row.suite_id = variant.suite_id;
  row.run_tag = variant.run_tag;
  row.sr_baseline = baseline.SR;
  row.sr_variant = variant.SR;
  for (std::size_t i = 0; i < 5; ++i) {
    if (!baseline.means || !variant.means) continue;
    double b = metric_component(*baseline.means, i);
    double v = metric_component(*variant.means, i);
    row.raw_baseline[i] = b;
    row.raw[i] = v;
    if (b == 0.0) continue;  // normalization undefined, others still reported
    row.normalized[i] = 100.0 * v / b;
    row.suites_counted[i] = 1;
  }
  return row;
}

NormalizedRow aggregate_over_suites(const std::vector<NormalizedRow>& rows) {
  if (rows.empty()) throw ConfigError("aggregate_over_suites needs >= 1 suite");
  NormalizedRow agg;
  agg.suite_id = "all";
  agg.run_tag = rows.front().run_tag;
  agg.suites_total = rows.size();
  double sr_b = 0.0, sr_v = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const NormalizedRow& r : rows) {
      if (!r.normalized[i]) continue;
      sum += *r.normalized[i];
      ++n;
    }
    agg.suites_counted[i] = n;
    if (n > 0) agg.normalized[i] = sum / static_cast<double>(n);
  }
  for (const NormalizedRow& r : rows) {
    sr_b += r.sr_baseline;
    sr_v += r.sr_variant;
  }
  agg.sr_baseline = sr_b / static_cast<double>(rows.size());
  agg.sr_variant = sr_v / static_cast<double>(rows.size());
  return agg;
}

std::string fmt_one_decimal(double v) {
  long long n = std::llround(v * 10.0);  // llround: half away from zero
  long long whole = n / 10;
  long long frac = std::llabs(n % 10);
  std::string s;
  if (n < 0 && whole == 0) s = "-";
  s += std::to_string(whole);
  s += '.';
  s += static_cast<char>('0' + frac);
  return s;
}

std::string fmt_signed_one_decimal(double v) {
  long long n = std::llround(v * 10.0);
  std::string s = fmt_one_decimal(v);
  if (n >= 0) s = "+" + s;
  return s;
}

std::string fmt_norm_cell(const std::optional<double>& normalized) {
  if (!normalized) return "undef";
  return fmt_one_decimal(*normalized) + " (" +
         fmt_signed_one_decimal(*normalized - 100.0) + ")";
}

std::string fmt_raw_cell(const std::optional<double>& raw,
                         const std::optional<double>& normalized) {
  if (!raw) return "undef";
  std::string s = fmt_one_decimal(*raw);
  if (normalized)
    s += " (" + fmt_signed_one_decimal(*normalized - 100.0) + "%)";
  return s;
}

std::string fmt_sr_cell(double sr_variant, double delta_points) {
  return fmt_one_decimal(100.0 * sr_variant) + " (" +
         fmt_signed_one_decimal(delta_points) + ")";
}

}  // namespace embeff
