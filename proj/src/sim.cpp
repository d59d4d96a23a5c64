#include "embeff/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "embeff/errors.hpp"
#include "embeff/rng.hpp"

namespace embeff {

namespace {

double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

double ArmModel::reach() const {
  double s = 0.0;
  for (double l : link_lengths) s += l;
  return s;
}

ArmModel ArmModel::default_arm() {
  ArmModel arm;
  arm.link_lengths = {0.5, 0.5, 0.5};
  arm.joint_limits.assign(3, {-std::numbers::pi, std::numbers::pi});
  return arm;
}

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "min_jerk") return ControllerKind::MinJerk;
  if (name == "bang_bang") return ControllerKind::BangBang;
  if (name == "proportional") return ControllerKind::Proportional;
  throw ConfigError("unknown controller kind '" + name + "'");
}

void validate_arm(const ArmModel& arm) {
  if (arm.link_lengths.empty()) throw ConfigError("arm has no links");
  if (arm.joint_limits.size() != arm.link_lengths.size())
    throw ConfigError("joint limit count does not match link count");
  for (double l : arm.link_lengths)
    if (!(std::isfinite(l) && l > 0.0))
      throw ConfigError("link lengths must be finite and positive");
  for (const auto& lim : arm.joint_limits)
    if (!(lim[0] < lim[1]))
      throw ConfigError("joint limits require lo < hi");
}

void validate_task(const ArmModel& arm, const TaskSpec& task) {
  if (!(task.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (task.T_max < 3) throw ConfigError("T_max must be >= 3");
  if (dist2(task.target, arm.base) > arm.reach())
    throw ConfigError("target (" + std::to_string(task.target[0]) + ", " +
                      std::to_string(task.target[1]) +
                      ") is beyond the arm's reach");
}

std::array<double, 2> forward_kinematics(const ArmModel& arm,
                                         const std::vector<double>& q) {
  validate_arm(arm);
  if (q.size() != arm.dof())
    throw ConfigError("configuration dimension does not match arm");
  double x = arm.base[0], y = arm.base[1], angle = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] < arm.joint_limits[i][0] || q[i] > arm.joint_limits[i][1])
      throw ConfigError("joint " + std::to_string(i + 1) + " out of limits");
    angle += q[i];
    x += arm.link_lengths[i] * std::cos(angle);
    y += arm.link_lengths[i] * std::sin(angle);
  }
  return {x, y};
}

std::vector<double> step_dynamics(const ArmModel& arm,
                                  const std::vector<double>& q,
                                  const std::vector<double>& a, double f,
                                  bool* clamped) {
  if (a.size() != q.size())
    throw ConfigError("action dimension does not match configuration");
  std::vector<double> next(q.size());
  bool hit = false;
  for (std::size_t j = 0; j < q.size(); ++j) {
    double raw = q[j] + a[j] / f;
    double lo = arm.joint_limits[j][0], hi = arm.joint_limits[j][1];
    next[j] = std::clamp(raw, lo, hi);
    if (next[j] != raw) hit = true;
  }
  if (clamped) *clamped = hit;
  return next;
}

double min_jerk_shape(double u) {
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

std::vector<std::vector<double>> min_jerk_plan(const std::vector<double>& q0,
                                               const std::vector<double>& q1,
                                               std::size_t T, double f) {
  if (T < 3) throw ConfigError("min_jerk_plan needs T >= 3");
  if (q0.size() != q1.size()) throw ConfigError("q0/q1 dimension mismatch");
  const std::size_t d = q0.size();
  std::vector<std::vector<double>> actions(T, std::vector<double>(d));
  double s_prev = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    double s = min_jerk_shape(static_cast<double>(t) / static_cast<double>(T));
    for (std::size_t j = 0; j < d; ++j)
      actions[t - 1][j] = f * (q1[j] - q0[j]) * (s - s_prev);
    s_prev = s;
  }
  return actions;
}

std::vector<std::vector<double>> bang_bang_plan(const std::vector<double>& q0,
                                                const std::vector<double>& q1,
                                                std::size_t T, double f) {
  if (T < 3) throw ConfigError("bang_bang_plan needs T >= 3");
  if (q0.size() != q1.size()) throw ConfigError("q0/q1 dimension mismatch");
  const std::size_t d = q0.size();
  const std::size_t m = (T + 1) / 2;  // arrive at step ceil(T/2), then hold
  std::vector<std::vector<double>> actions(T, std::vector<double>(d, 0.0));
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t j = 0; j < d; ++j)
      actions[t][j] = f * (q1[j] - q0[j]) / static_cast<double>(m);
  return actions;
}

bool check_success(const ArmModel& arm, const std::vector<double>& q,
                   const TaskSpec& task) {
  return dist2(forward_kinematics(arm, q), task.target) <= task.epsilon;
}

std::vector<double> default_q0(const ArmModel& arm) {
  // Bent rest pose so the Jacobian starts away from the singular
  // fully-stretched configuration.
  std::vector<double> q0(arm.dof());
  for (std::size_t j = 0; j < q0.size(); ++j) {
    double bend = (j % 2 == 0) ? 0.5 : -0.5;
    q0[j] = std::clamp(bend, arm.joint_limits[j][0], arm.joint_limits[j][1]);
  }
  return q0;
}

std::vector<double> solve_ik(const ArmModel& arm, const std::vector<double>& q0,
                             const std::array<double, 2>& target, double tol) {
  validate_arm(arm);
  const std::size_t d = arm.dof();
  std::vector<double> q = q0;
  const double lambda2 = 0.01;  // damping^2
  for (int iter = 0; iter < 800; ++iter) {
    std::array<double, 2> p = forward_kinematics(arm, q);
    double ex = target[0] - p[0], ey = target[1] - p[1];
    if (std::sqrt(ex * ex + ey * ey) <= tol) return q;
    // Planar chain Jacobian, built from link-end positions.
    std::vector<double> jx(d), jy(d);
    {
      double angle = 0.0, x = arm.base[0], y = arm.base[1];
      std::vector<double> ends_x(d), ends_y(d);
      for (std::size_t i = 0; i < d; ++i) {
        angle += q[i];
        x += arm.link_lengths[i] * std::cos(angle);
        y += arm.link_lengths[i] * std::sin(angle);
        ends_x[i] = x;
        ends_y[i] = y;
      }
      double jox = arm.base[0], joy = arm.base[1];
      for (std::size_t j = 0; j < d; ++j) {
        jx[j] = -(ends_y[d - 1] - joy);
        jy[j] = ends_x[d - 1] - jox;
        jox = ends_x[j];
        joy = ends_y[j];
      }
    }
    // dq = J^T (J J^T + lambda^2 I)^-1 e, with J J^T a 2x2 matrix.
    double a11 = lambda2, a12 = 0.0, a22 = lambda2;
    for (std::size_t j = 0; j < d; ++j) {
      a11 += jx[j] * jx[j];
      a12 += jx[j] * jy[j];
      a22 += jy[j] * jy[j];
    }
    double det = a11 * a22 - a12 * a12;
    double wx = (a22 * ex - a12 * ey) / det;
    double wy = (a11 * ey - a12 * ex) / det;
    for (std::size_t j = 0; j < d; ++j) {
      double dq = jx[j] * wx + jy[j] * wy;
      q[j] = std::clamp(q[j] + std::clamp(dq, -0.2, 0.2),
                        arm.joint_limits[j][0], arm.joint_limits[j][1]);
    }
  }
  throw ConfigError("inverse kinematics failed to converge to the target");
}

// Logged qdot is the realized velocity entering each step: qdot_1 = 0 (the
// arm starts at rest), qdot_t = f * (q_t - q_{t-1}).
EpisodeLog rollout_custom(const ArmModel& arm, const TaskSpec& task, double f,
                          const std::vector<double>& q0_in,
                          const ActionFn& action_fn) {
  validate_arm(arm);
  validate_task(arm, task);
  if (!(f > 0.0 && std::isfinite(f))) throw ConfigError("f must be positive");
  std::vector<double> q0 = q0_in.empty() ? default_q0(arm) : q0_in;
  if (q0.size() != arm.dof()) throw ConfigError("q0 dimension mismatch");
  EpisodeLog ep;
  ep.f = f;
  ep.task_id = task.g_id;
  std::vector<double> q = q0;
  std::vector<double> q_prev = q0;
  for (std::size_t t = 1; t <= task.T_max; ++t) {
    StepRecord s;
    s.t = static_cast<std::int64_t>(t);
    std::array<double, 2> p = forward_kinematics(arm, q);
    s.p = {p[0], p[1], 0.0};
    s.q = q;
    std::vector<double> v(q.size(), 0.0);
    if (t > 1)
      for (std::size_t j = 0; j < q.size(); ++j)
        v[j] = f * (q[j] - q_prev[j]);
    s.qdot = std::move(v);
    s.a = action_fn(t - 1, q);
    ep.steps.push_back(std::move(s));
    if (check_success(arm, q, task)) {
      ep.success = true;
      break;
    }
    q_prev = q;
    q = step_dynamics(arm, q, ep.steps.back().a, f);
  }
  return ep;
}

EpisodeLog rollout(const ArmModel& arm, const TaskSpec& task,
                   const ControllerSpec& ctrl, double f,
                   const std::vector<double>& q0_in) {
  validate_arm(arm);
  validate_task(arm, task);
  if (ctrl.noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
  std::vector<double> q0 = q0_in.empty() ? default_q0(arm) : q0_in;
  if (q0.size() != arm.dof()) throw ConfigError("q0 dimension mismatch");

  std::vector<double> q_goal =
      solve_ik(arm, q0, task.target, 0.25 * task.epsilon);

  // Plan horizon from the largest joint displacement and the nominal speed.
  double max_dq = 0.0;
  for (std::size_t j = 0; j < q0.size(); ++j)
    max_dq = std::max(max_dq, std::abs(q_goal[j] - q0[j]));
  double duration = std::max(0.3, max_dq / std::max(ctrl.speed, 1e-9));
  auto T_plan = static_cast<std::size_t>(std::ceil(duration * f));
  T_plan = std::clamp<std::size_t>(T_plan, 3, task.T_max - 1);

  std::vector<std::vector<double>> plan;
  if (ctrl.kind == ControllerKind::MinJerk)
    plan = min_jerk_plan(q0, q_goal, T_plan, f);
  else if (ctrl.kind == ControllerKind::BangBang)
    plan = bang_bang_plan(q0, q_goal, T_plan, f);

  SplitMix64 rng(ctrl.seed);
  const double vmax = 2.0 * ctrl.speed;
  auto action_fn = [&](std::size_t t, const std::vector<double>& q) {
    std::vector<double> a(q.size(), 0.0);
    if (ctrl.kind == ControllerKind::Proportional) {
      for (std::size_t j = 0; j < q.size(); ++j)
        a[j] = std::clamp(4.0 * (q_goal[j] - q[j]), -vmax, vmax);
    } else if (t < plan.size()) {
      a = plan[t];
    }
    if (ctrl.noise_std > 0.0)
      for (double& x : a) x += ctrl.noise_std * rng.next_gaussian();
    return a;
  };
  return rollout_custom(arm, task, f, q0, action_fn);
}

EpisodeLog rollout_actions(const ArmModel& arm, const TaskSpec& task,
                           const std::vector<std::vector<double>>& actions,
                           double f, const std::vector<double>& q0_in) {
  auto action_fn = [&](std::size_t t, const std::vector<double>& q) {
    if (t < actions.size()) return actions[t];
    return std::vector<double>(q.size(), 0.0);
  };
  return rollout_custom(arm, task, f, q0_in, action_fn);
}

}  // namespace embeff
