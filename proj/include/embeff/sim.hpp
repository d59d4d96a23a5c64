#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "embeff/episode.hpp"

namespace embeff {

/// Planar n-link arm; end-effector positions embed into 3-D at z = 0.
struct ArmModel {
  std::vector<double> link_lengths;                  // [m], each > 0
  std::vector<std::array<double, 2>> joint_limits;   // [lo, hi] per joint [rad]
  std::array<double, 2> base{0.0, 0.0};

  std::size_t dof() const { return link_lengths.size(); }
  double reach() const;

  static ArmModel default_arm();  // 3 links of 0.5 m, limits +-pi
};

struct TaskSpec {
  std::array<double, 2> target{};  // [m]
  double epsilon = 0.02;           // success radius [m]
  std::size_t T_max = 200;
  std::string g_id;
};

enum class ControllerKind { MinJerk, BangBang, Proportional };

ControllerKind parse_controller_kind(const std::string& name);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::MinJerk;
  double noise_std = 0.0;   // [rad/s], added to each action before integration
  std::uint64_t seed = 0;
  double speed = 1.0;       // nominal joint speed scale [rad/s]
};

void validate_arm(const ArmModel& arm);
void validate_task(const ArmModel& arm, const TaskSpec& task);

std::array<double, 2> forward_kinematics(const ArmModel& arm,
                                         const std::vector<double>& q);

// q_{t+1} = clamp(q_t + a_t / f); reports whether any joint was clamped.
std::vector<double> step_dynamics(const ArmModel& arm,
                                  const std::vector<double>& q,
                                  const std::vector<double>& a, double f,
                                  bool* clamped = nullptr);

// Quintic ease s(u) = 10u^3 - 15u^4 + 6u^5.
double min_jerk_shape(double u);

// Velocity-command sequences realizing q0 -> q1 over T steps.
std::vector<std::vector<double>> min_jerk_plan(const std::vector<double>& q0,
                                               const std::vector<double>& q1,
                                               std::size_t T, double f);
std::vector<std::vector<double>> bang_bang_plan(const std::vector<double>& q0,
                                                const std::vector<double>& q1,
                                                std::size_t T, double f);

bool check_success(const ArmModel& arm, const std::vector<double>& q,
                   const TaskSpec& task);

// Damped-least-squares inverse kinematics; converges to within tol of the
// target or throws ConfigError.
std::vector<double> solve_ik(const ArmModel& arm, const std::vector<double>& q0,
                             const std::array<double, 2>& target, double tol);

EpisodeLog rollout(const ArmModel& arm, const TaskSpec& task,
                   const ControllerSpec& ctrl, double f,
                   const std::vector<double>& q0 = {});

// Closed-loop rollout with a caller-supplied action source. action_fn
// receives the zero-based step index and current configuration. Success
// terminates the episode at the first step whose end-effector is within
// epsilon of the target; otherwise T = T_max and success = false.
using ActionFn =
    std::function<std::vector<double>(std::size_t, const std::vector<double>&)>;
EpisodeLog rollout_custom(const ArmModel& arm, const TaskSpec& task, double f,
                          const std::vector<double>& q0,
                          const ActionFn& action_fn);

// Open-loop replay of a given action sequence under the same logging and
// termination rules as rollout().
EpisodeLog rollout_actions(const ArmModel& arm, const TaskSpec& task,
                           const std::vector<std::vector<double>>& actions,
                           double f, const std::vector<double>& q0 = {});

std::vector<double> default_q0(const ArmModel& arm);

}  // namespace embeff
