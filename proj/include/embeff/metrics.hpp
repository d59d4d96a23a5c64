#pragma once

#include <optional>
#include <span>

#include "embeff/episode.hpp"

namespace embeff {

/// Per-episode metric six-tuple (SR lives at suite level).
struct MetricVector {
  double tau = 0.0;      // completion time [s]
  double L_ee = 0.0;     // end-effector path length [m]
  double L_joint = 0.0;  // joint-space path length [rad]
  double J = 0.0;        // mean squared second difference of qdot, f^4 scaled
  double R = 0.0;        // mean action rate [units/step]
};

struct SuiteSummary {
  std::string suite_id;
  std::string run_tag;
  double SR = 0.0;
  std::size_t n_success = 0;
  std::size_t N = 0;
  // Success-conditional means; absent when no episode succeeded.
  std::optional<MetricVector> means;
};

// Neumaier compensated summation; deterministic for a fixed element order.
double stable_sum(std::span<const double> xs);

double completion_time(const EpisodeLog& ep);
double ee_path_length(const EpisodeLog& ep);     // T >= 2
double joint_path_length(const EpisodeLog& ep);  // T >= 2
double avg_jerk(const EpisodeLog& ep);           // T >= 3, derives qdot if absent
double avg_action_rate(const EpisodeLog& ep);    // T >= 2

MetricVector episode_metrics(const EpisodeLog& ep);  // T >= 3

double success_rate(const SuiteRun& run);
SuiteSummary success_conditional_mean(const SuiteRun& run);

}  // namespace embeff
