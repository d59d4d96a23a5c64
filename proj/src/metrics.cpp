#include "embeff/metrics.hpp"

#include <cmath>
#include <vector>

#include "embeff/errors.hpp"

namespace embeff {

namespace {

void require_length(const EpisodeLog& ep, std::size_t min_T, const char* what) {
  if (ep.T() < min_T)
    throw ValidationError(std::string(what) + " needs T >= " +
                          std::to_string(min_T) + ", got T=" +
                          std::to_string(ep.T()));
}

double segment_norm(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double diff = b[j] - a[j];
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace

double stable_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double completion_time(const EpisodeLog& ep) {
  validate_episode(ep);
  return static_cast<double>(ep.T()) / ep.f;
}

double ee_path_length(const EpisodeLog& ep) {
  validate_episode(ep);
  require_length(ep, 2, "ee_path_length");
  std::vector<double> segs;
  segs.reserve(ep.T() - 1);
  for (std::size_t t = 0; t + 1 < ep.T(); ++t) {
    const auto& a = ep.steps[t].p;
    const auto& b = ep.steps[t + 1].p;
    double dx = b[0] - a[0], dy = b[1] - a[1], dz = b[2] - a[2];
    segs.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  return stable_sum(segs);
}

double joint_path_length(const EpisodeLog& ep) {
  validate_episode(ep);
  require_length(ep, 2, "joint_path_length");
  std::vector<double> segs;
  segs.reserve(ep.T() - 1);
  for (std::size_t t = 0; t + 1 < ep.T(); ++t)
    segs.push_back(segment_norm(ep.steps[t].q, ep.steps[t + 1].q));
  return stable_sum(segs);
}

double avg_jerk(const EpisodeLog& ep) {
  require_length(ep, 3, "avg_jerk");
  const EpisodeLog e = derive_velocities(ep);
  const std::size_t T = e.T();
  const std::size_t d = e.dof();
  const double f2 = e.f * e.f;
  std::vector<double> terms;
  terms.reserve(T - 2);
  // t = 2 .. T-1 in 1-based indexing
  for (std::size_t t = 1; t + 1 < T; ++t) {
    const auto& vm = *e.steps[t - 1].qdot;
    const auto& v0 = *e.steps[t].qdot;
    const auto& vp = *e.steps[t + 1].qdot;
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double dd = vp[j] - 2.0 * v0[j] + vm[j];
      s += dd * dd;
    }
    terms.push_back(s);
  }
  return f2 * f2 / static_cast<double>(T - 2) * stable_sum(terms);
}

double avg_action_rate(const EpisodeLog& ep) {
  validate_episode(ep);
  require_length(ep, 2, "avg_action_rate");
  std::vector<double> segs;
  segs.reserve(ep.T() - 1);
  for (std::size_t t = 0; t + 1 < ep.T(); ++t)
    segs.push_back(segment_norm(ep.steps[t].a, ep.steps[t + 1].a));
  return stable_sum(segs) / static_cast<double>(ep.T() - 1);
}

MetricVector episode_metrics(const EpisodeLog& ep) {
  MetricVector m;
  m.tau = completion_time(ep);
  m.L_ee = ee_path_length(ep);
  m.L_joint = joint_path_length(ep);
  m.J = avg_jerk(ep);
  m.R = avg_action_rate(ep);
  return m;
}

double success_rate(const SuiteRun& run) {
  if (run.episodes.empty()) throw ValidationError("suite has no episodes");
  std::size_t n = 0;
  for (const EpisodeLog& ep : run.episodes) n += ep.success ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(run.N());
}

SuiteSummary success_conditional_mean(const SuiteRun& run) {
  if (run.episodes.empty()) throw ValidationError("suite has no episodes");
  SuiteSummary s;
  s.suite_id = run.episodes.front().suite_id;
  s.run_tag = run.episodes.front().run_tag;
  s.N = run.N();
  std::vector<double> tau, lee, ljoint, jerk, rate;
  for (const EpisodeLog& ep : run.episodes) {
    if (!ep.success) continue;
    MetricVector m = episode_metrics(ep);
    tau.push_back(m.tau);
    lee.push_back(m.L_ee);
    ljoint.push_back(m.L_joint);
    jerk.push_back(m.J);
    rate.push_back(m.R);
  }
  s.n_success = tau.size();
  s.SR = static_cast<double>(s.n_success) / static_cast<double>(s.N);
  if (s.n_success > 0) {
    const double n = static_cast<double>(s.n_success);
    MetricVector m;
    m.tau = stable_sum(tau) / n;
    m.L_ee = stable_sum(lee) / n;
    m.L_joint = stable_sum(ljoint) / n;
    m.J = stable_sum(jerk) / n;
    m.R = stable_sum(rate) / n;
    s.means = m;
  }
  return s;
}

}  // namespace embeff
