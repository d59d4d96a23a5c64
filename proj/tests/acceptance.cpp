// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "embeff/compress.hpp"
#include "embeff/errors.hpp"
#include "embeff/metrics.hpp"
#include "embeff/normalize.hpp"
#include "embeff/policy.hpp"
#include "embeff/report.hpp"
#include "embeff/rng.hpp"
#include "embeff/sim.hpp"

using namespace embeff;

namespace {

struct Check {
  std::string name;
  std::function<bool(std::string&)> fn;
};

bool expect(bool cond, const std::string& what, std::string& why) {
  if (!cond && why.empty()) why = what;
  return cond;
}

// ---- criterion 1: display arithmetic of baseline-normalized deltas ----

bool crit_normalization(std::string& why) {
  bool ok = true;
  auto delta = [](double var, double base) {
    return fmt_signed_one_decimal(100.0 * var / base - 100.0);
  };
  ok &= expect(delta(1973.1, 1540.9) == "+28.0", "1973.1/1540.9", why);
  ok &= expect(delta(5.1, 5.4) == "-5.6", "5.1/5.4", why);
  ok &= expect(delta(1374.9, 1810.0) == "-24.0", "1374.9/1810.0", why);
  ok &= expect(delta(1131.9, 1524.9) == "-25.8", "1131.9/1524.9", why);
  return ok;
}

// ---- criterion 2: hand-derived metric oracles ----

EpisodeLog episode_from(double f, std::vector<std::array<double, 3>> p,
                        std::vector<std::vector<double>> q,
                        std::vector<std::vector<double>> a,
                        std::vector<std::vector<double>> qdot = {}) {
  EpisodeLog ep;
  ep.f = f;
  ep.success = true;
  ep.task_id = "t";
  ep.suite_id = "s";
  ep.run_tag = "r";
  for (std::size_t i = 0; i < q.size(); ++i) {
    StepRecord s;
    s.t = static_cast<std::int64_t>(i) + 1;
    s.p = p.empty() ? std::array<double, 3>{0, 0, 0} : p[i];
    s.q = q[i];
    s.a = a.empty() ? std::vector<double>{0.0} : a[i];
    if (!qdot.empty()) s.qdot = qdot[i];
    ep.steps.push_back(s);
  }
  return ep;
}

bool crit_metric_oracles(std::string& why) {
  bool ok = true;
  auto lee = episode_from(1.0, {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}},
                          {{0.0}, {0.0}, {0.0}}, {});
  ok &= expect(std::fabs(ee_path_length(lee) - 2.0) < 1e-12, "L_ee", why);
  auto lj = episode_from(1.0, {}, {{0.0, 0.0}, {3.0, 4.0}}, {});
  ok &= expect(std::fabs(joint_path_length(lj) - 5.0) < 1e-12, "L_joint", why);
  auto jk = episode_from(1.0, {}, {{0.0}, {0.0}, {0.0}, {0.0}}, {},
                         {{0.0}, {1.0}, {0.0}, {1.0}});
  ok &= expect(std::fabs(avg_jerk(jk) - 4.0) < 1e-12, "J", why);
  auto rr = episode_from(1.0, {}, {{0.0}, {0.0}, {0.0}},
                         {{0.0, 0.0}, {3.0, 4.0}, {3.0, 4.0}});
  ok &= expect(std::fabs(avg_action_rate(rr) - 2.5) < 1e-12, "R", why);
  return ok;
}

// ---- criterion 3: invariance properties on randomized episodes ----

EpisodeLog random_ep(SplitMix64& rng, std::size_t T, std::size_t d) {
  EpisodeLog ep;
  ep.f = 1.0 + 30.0 * rng.next_unit();
  ep.success = true;
  ep.task_id = "t";
  ep.suite_id = "s";
  ep.run_tag = "r";
  for (std::size_t t = 1; t <= T; ++t) {
    StepRecord s;
    s.t = static_cast<std::int64_t>(t);
    for (auto& x : s.p) x = 2.0 * rng.next_unit() - 1.0;
    s.q.resize(d);
    for (auto& x : s.q) x = 4.0 * rng.next_unit() - 2.0;
    std::vector<double> v(d);
    for (auto& x : v) x = 2.0 * rng.next_unit() - 1.0;
    s.qdot = std::move(v);
    s.a = {rng.next_unit(), rng.next_unit()};
    ep.steps.push_back(std::move(s));
  }
  return ep;
}

bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({std::fabs(a), std::fabs(b), 1.0});
}

bool crit_invariances(std::string& why) {
  SplitMix64 rng(101);
  for (int i = 0; i < 1000; ++i) {
    std::size_t T = 3 + rng.next_u64() % 298;
    std::size_t d = 1 + rng.next_u64() % 7;
    EpisodeLog ep = random_ep(rng, T, d);
    MetricVector base = episode_metrics(ep);

    EpisodeLog shifted = ep;
    for (auto& s : shifted.steps) {
      for (auto& x : s.p) x += 3.0;
      for (auto& x : s.q) x -= 1.5;
    }
    MetricVector ms = episode_metrics(shifted);
    if (!close_rel(ms.L_ee, base.L_ee, 1e-9) ||
        !close_rel(ms.L_joint, base.L_joint, 1e-9) ||
        !close_rel(ms.J, base.J, 1e-9)) {
      why = "translation, episode " + std::to_string(i);
      return false;
    }

    EpisodeLog rev = ep;
    std::reverse(rev.steps.begin(), rev.steps.end());
    for (std::size_t t = 0; t < rev.steps.size(); ++t)
      rev.steps[t].t = static_cast<std::int64_t>(t) + 1;
    MetricVector mr = episode_metrics(rev);
    if (!close_rel(mr.L_ee, base.L_ee, 1e-9) ||
        !close_rel(mr.L_joint, base.L_joint, 1e-9) ||
        !close_rel(mr.J, base.J, 1e-9) || !close_rel(mr.R, base.R, 1e-9) ||
        mr.tau != base.tau) {
      why = "time reversal, episode " + std::to_string(i);
      return false;
    }

    const double c = 1.0 + 2.0 * rng.next_unit();
    EpisodeLog scaled = ep;
    for (auto& s : scaled.steps) {
      for (auto& x : s.q) x *= c;
      for (auto& x : *s.qdot) x *= c;
    }
    MetricVector mc = episode_metrics(scaled);
    if (!close_rel(mc.L_joint, c * base.L_joint, 1e-9) ||
        !close_rel(mc.J, c * c * base.J, 1e-9)) {
      why = "amplitude scaling, episode " + std::to_string(i);
      return false;
    }
    EpisodeLog faster = ep;
    faster.f *= c;
    MetricVector mf = episode_metrics(faster);
    if (!close_rel(mf.tau, base.tau / c, 1e-9) ||
        !close_rel(mf.J, c * c * c * c * base.J, 1e-9)) {
      why = "frequency scaling, episode " + std::to_string(i);
      return false;
    }
  }
  return true;
}

// ---- criterion 4: equal success rate, unequal efficiency ----

bool crit_equal_sr_unequal_eff(std::string& why) {
  ArmModel arm = ArmModel::default_arm();
  std::vector<double> q0 = default_q0(arm);
  std::array<double, 2> start = forward_kinematics(arm, q0);
  SplitMix64 rng(202);
  int tasks_done = 0;
  int tau_differs = 0;
  while (tasks_done < 20) {
    std::vector<double> q_goal(arm.dof());
    for (auto& x : q_goal) x = -2.2 + 4.4 * rng.next_unit();
    std::array<double, 2> target = forward_kinematics(arm, q_goal);
    if (std::hypot(target[0] - start[0], target[1] - start[1]) < 0.3) continue;
    TaskSpec task;
    task.target = target;
    task.epsilon = 0.02;
    task.g_id = "g" + std::to_string(tasks_done);
    ControllerSpec mj, bb;
    mj.kind = ControllerKind::MinJerk;
    bb.kind = ControllerKind::BangBang;
    EpisodeLog em, eb;
    try {
      em = rollout(arm, task, mj, 20.0, q0);
      eb = rollout(arm, task, bb, 20.0, q0);
    } catch (const ConfigError&) {
      continue;  // IK failed on a near-singular sample; draw another task
    }
    if (!em.success || !eb.success) {
      why = "controller failed task " + std::to_string(tasks_done);
      return false;
    }
    if (!(avg_jerk(em) < avg_jerk(eb))) {
      why = "jerk ordering violated on task " + std::to_string(tasks_done);
      return false;
    }
    if (completion_time(em) != completion_time(eb)) ++tau_differs;
    ++tasks_done;
  }
  return expect(tau_differs > 0, "tau never differed", why);
}

// ---- criterion 5: transform codec behavior ----

bool crit_codec(std::string& why) {
  SplitMix64 rng(303);
  for (int i = 0; i < 1000; ++i) {
    std::size_t n = 1 + rng.next_u64() % 64;
    std::vector<double> x(n);
    for (auto& v : x) v = 2.0 * rng.next_unit() - 1.0;
    auto c = dct_forward(x);
    auto y = dct_inverse(c);
    double ex = 0.0, ec = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::fabs(y[j] - x[j]) >= 1e-12) {
        why = "round trip, vector " + std::to_string(i);
        return false;
      }
      ex += x[j] * x[j];
      ec += c[j] * c[j];
    }
    if (!close_rel(ex, ec, 1e-12)) {
      why = "Parseval, vector " + std::to_string(i);
      return false;
    }
  }

  // Near-lossless limit on a random chunk.
  ActionChunk chunk;
  chunk.H = 32;
  chunk.k = 3;
  chunk.f = 20.0;
  chunk.values.resize(chunk.H * chunk.k);
  for (auto& v : chunk.values) v = 2.0 * rng.next_unit() - 1.0;
  auto back =
      reconstruct_action_chunk(compress_action_chunk(chunk, 1e-13, chunk.H));
  for (std::size_t j = 0; j < chunk.values.size(); ++j)
    if (std::fabs(back.values[j] - chunk.values[j]) >= 1e-9) {
      why = "fine-step reconstruction";
      return false;
    }

  // Full pipeline: coarse quantization of a smooth reference rollout must
  // not decrease the average jerk.
  ArmModel arm = ArmModel::default_arm();
  std::vector<double> q0 = default_q0(arm);
  double j_orig = 0.0, j_coded = 0.0;
  int n_tasks = 0;
  for (double ang : {0.3, 0.9, 1.5, 2.1}) {
    TaskSpec task;
    task.target = {1.1 * std::cos(ang), 1.1 * std::sin(ang)};
    task.g_id = "c";
    ControllerSpec mj;
    mj.kind = ControllerKind::MinJerk;
    EpisodeLog ep = rollout(arm, task, mj, 20.0, q0);
    if (!ep.success || ep.T() < 3) continue;
    ActionChunk whole;
    whole.H = ep.T();
    whole.k = ep.action_dim();
    whole.f = ep.f;
    whole.values.resize(whole.H * whole.k);
    for (std::size_t t = 0; t < whole.H; ++t)
      for (std::size_t j = 0; j < whole.k; ++j)
        whole.at(t, j) = ep.steps[t].a[j];
    double cmax = 0.0;
    for (std::size_t j = 0; j < whole.k; ++j) {
      std::vector<double> col(whole.H);
      for (std::size_t t = 0; t < whole.H; ++t) col[t] = whole.at(t, j);
      for (double cc : dct_forward(col)) cmax = std::max(cmax, std::fabs(cc));
    }
    auto coded = reconstruct_action_chunk(
        compress_action_chunk(whole, 0.1 * cmax, whole.H));
    std::vector<std::vector<double>> actions(whole.H,
                                             std::vector<double>(whole.k));
    for (std::size_t t = 0; t < whole.H; ++t)
      for (std::size_t j = 0; j < whole.k; ++j)
        actions[t][j] = coded.at(t, j);
    TaskSpec open = task;
    open.epsilon = 1e-12;  // force a full-length replay for a fair comparison
    EpisodeLog replay = rollout_actions(arm, open, actions, 20.0, q0);
    EpisodeLog ref = ep;
    if (replay.T() < 3) continue;
    j_orig += avg_jerk(ref);
    j_coded += avg_jerk(replay);
    ++n_tasks;
  }
  if (n_tasks == 0) {
    why = "no reference rollouts available";
    return false;
  }
  return expect(j_coded >= j_orig, "coarse codec lowered the mean jerk", why);
}

// ---- criterion 6: quantization and pruning contracts ----

bool crit_quant_prune(std::string& why) {
  SplitMix64 rng(404);
  for (int i = 0; i < 1000; ++i) {
    int bits = (i % 2 == 0) ? 4 : 8;
    std::size_t n = 1 + rng.next_u64() % 64;
    WeightTensor w;
    w.name = "w";
    w.shape = {n};
    w.values.resize(n);
    for (auto& v : w.values) v = 6.0 * rng.next_unit() - 3.0;
    auto q = fake_quantize(w, QuantSpec{bits});
    double maxabs = 0.0;
    for (double v : w.values) maxabs = std::max(maxabs, std::fabs(v));
    double s = maxabs / double((1 << (bits - 1)) - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (std::fabs(q.values[j] - w.values[j]) >
          s / 2 + std::ldexp(s, -50)) {
        why = "quantization error bound, tensor " + std::to_string(i);
        return false;
      }
    auto q2 = fake_quantize(q, QuantSpec{bits});
    for (std::size_t j = 0; j < n; ++j)
      if (std::fabs(q2.values[j] - q.values[j]) >= 1e-12) {
        why = "quantization idempotence, tensor " + std::to_string(i);
        return false;
      }
  }

  for (int i = 0; i < 500; ++i) {
    std::size_t n = 1 + rng.next_u64() % 32;
    WeightTensor w;
    w.name = "w";
    w.shape = {n};
    w.values.resize(n);
    for (auto& v : w.values) {
      v = 2.0 * rng.next_unit() - 1.0;
      if (rng.next_u64() % 4 == 0) v = round_half_away(v * 2.0) / 2.0;  // ties
    }
    double ratio = rng.next_unit() * 0.999;
    std::vector<bool> mask;
    magnitude_prune(w, PruneSpec{ratio, PruneScope::PerTensor}, &mask);

    // Sort-based oracle: prune the first floor(ratio*n) indices ordered by
    // (magnitude asc, index asc).
    std::vector<std::size_t> idx(n);
    for (std::size_t j = 0; j < n; ++j) idx[j] = j;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::fabs(w.values[a]) < std::fabs(w.values[b]);
    });
    auto n_prune = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(n)));
    std::vector<bool> oracle(n, true);
    for (std::size_t j = 0; j < n_prune; ++j) oracle[idx[j]] = false;
    if (mask != oracle) {
      why = "prune mask mismatch, tensor " + std::to_string(i);
      return false;
    }
  }
  return true;
}

// ---- criterion 7: analytic vs numeric gradients ----

bool crit_gradients(std::string& why) {
  SplitMix64 rng(505);
  for (int batch = 0; batch < 10; ++batch) {
    MlpPolicy p = init_policy(5, {12, 10}, 5, 2, 20.0, 600 + batch);
    std::vector<TrainSample> demos;
    for (int i = 0; i < 4; ++i) {
      TrainSample s;
      s.obs = Eigen::VectorXd(5);
      for (Eigen::Index j = 0; j < 5; ++j)
        s.obs[j] = 2.0 * rng.next_unit() - 1.0;
      s.demo = Eigen::VectorXd(10);
      for (Eigen::Index j = 0; j < 10; ++j)
        s.demo[j] = 1.6 * rng.next_unit() - 0.8;
      demos.push_back(std::move(s));
    }
    TrainConfig cfg;
    cfg.eta = 0.01;
    double err = finite_diff_grad_check(p, demos, cfg, 1e-6, 120,
                                        700 + std::uint64_t(batch));
    if (!(err < 1e-4)) {
      why = "batch " + std::to_string(batch) + " max rel err " +
            std::to_string(err);
      return false;
    }
  }
  return true;
}

// ---- criterion 8: smoothness-regularized cloning lowers rollout jerk ----

struct EvalStats {
  double sr = 0.0;
  double mean_J = 0.0;
};

EvalStats eval_policy(const ArmModel& arm, const MlpPolicy& policy,
                      const std::vector<TaskSpec>& tasks, double f,
                      const std::vector<double>& q0) {
  EvalStats st;
  std::vector<double> jerks;
  for (const TaskSpec& task : tasks) {
    EpisodeLog ep = policy_rollout(arm, task, policy, f, q0);
    if (ep.success) st.sr += 1.0;
    if (ep.T() >= 3) jerks.push_back(avg_jerk(ep));
  }
  st.sr /= static_cast<double>(tasks.size());
  st.mean_J = jerks.empty() ? 0.0 : stable_sum(jerks) / double(jerks.size());
  return st;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool crit_aux_loss_direction(std::string& why) {
  ArmModel arm;
  arm.link_lengths = {0.6, 0.6};
  arm.joint_limits = {{-M_PI, M_PI}, {-M_PI, M_PI}};
  std::vector<double> q0 = default_q0(arm);

  const double f = 10.0;
  std::vector<TaskSpec> demo_tasks;
  for (double ang : {0.2, 0.5, 0.8, 1.1, 1.4, 1.7}) {
    TaskSpec t;
    t.target = {0.9 * std::cos(ang), 0.9 * std::sin(ang)};
    t.epsilon = 0.03;
    t.T_max = 400;
    t.g_id = "d";
    demo_tasks.push_back(t);
  }

  SuiteRun demos_run;
  std::uint64_t noise_seed = 900;
  for (const TaskSpec& task : demo_tasks) {
    for (int rep = 0; rep < 6; ++rep) {
      ControllerSpec mj;
      mj.kind = ControllerKind::MinJerk;
      mj.noise_std = 0.03;
      mj.speed = 0.4;
      mj.seed = noise_seed++;
      EpisodeLog ep = rollout(arm, task, mj, f, q0);
      if (ep.success) demos_run.episodes.push_back(std::move(ep));
    }
  }
  if (demos_run.N() < 6) {
    why = "too few successful demonstrations";
    return false;
  }
  std::vector<TrainSample> samples = demos_from_suite(demos_run, 8, 3, 400);
  if (samples.empty()) {
    why = "no training samples extracted";
    return false;
  }

  std::vector<TaskSpec> eval_tasks = demo_tasks;
  for (TaskSpec& t : eval_tasks) t.epsilon = 0.08;

  std::vector<double> sr0, sr1, j0, j1;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg;
    cfg.epochs = 4000;
    cfg.batch_size = 32;
    cfg.lr = 0.0015;
    cfg.hidden = {32, 32};
    cfg.H = 8;
    cfg.f = f;
    cfg.seed = seed;

    cfg.eta = 0.0;
    TrainResult plain = train(cfg, samples, 5, 2);
    cfg.eta = 0.01;
    TrainResult smooth = train(cfg, samples, 5, 2);

    EvalStats a = eval_policy(arm, plain.policy, eval_tasks, f, q0);
    EvalStats b = eval_policy(arm, smooth.policy, eval_tasks, f, q0);
    sr0.push_back(a.sr);
    j0.push_back(a.mean_J);
    sr1.push_back(b.sr);
    j1.push_back(b.mean_J);
  }
  double mj0 = median(j0), mj1 = median(j1);
  double msr0 = median(sr0), msr1 = median(sr1);
  if (!(mj1 < mj0)) {
    why = "median jerk " + std::to_string(mj1) + " !< " + std::to_string(mj0);
    return false;
  }
  if (std::fabs(msr1 - msr0) > 0.05 + 1e-12) {
    why = "success rates diverged: " + std::to_string(msr1) + " vs " +
          std::to_string(msr0);
    return false;
  }
  return true;
}

// ---- criterion 9: evaluation-protocol conformance ----

bool crit_protocol(std::string& why) {
  Scenario sc;
  sc.suite_id = "proto";
  sc.run_tag = "r";
  sc.seed = 11;
  sc.arm = ArmModel::default_arm();
  ScenarioEntry e;
  e.task.target = {0.6, 0.6};
  e.task.g_id = "g";
  e.ctrl.kind = ControllerKind::MinJerk;
  e.ctrl.noise_std = 0.03;
  e.f = 20.0;
  e.repetitions = 60;
  sc.entries.push_back(e);

  SuiteRun capped = run_scenario(sc, StopRule::FirstTenSuccesses);
  std::size_t n_success = 0;
  for (const auto& ep : capped.episodes) n_success += ep.success ? 1 : 0;
  if (n_success != 10 || !capped.episodes.back().success) {
    why = "first10 stopped with " + std::to_string(n_success) + " successes";
    return false;
  }

  sc.entries[0].repetitions = 7;
  SuiteRun fixed = run_scenario(sc, StopRule::Fixed);
  auto dir = std::filesystem::temp_directory_path() / "embeff_accept_suite";
  std::filesystem::remove_all(dir);
  save_suite(fixed, dir);
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".jsonl") ++files;
  std::filesystem::remove_all(dir);
  if (files != 7) {
    why = "fixed mode wrote " + std::to_string(files) + " episode files";
    return false;
  }

  // Success-conditional means must exclude failures.
  SuiteRun run;
  EpisodeLog good = episode_from(
      1.0, {}, std::vector<std::vector<double>>(4, {0.0}), {});
  EpisodeLog bad = episode_from(
      1.0, {}, std::vector<std::vector<double>>(400, {0.0}), {});
  bad.success = false;
  run.episodes = {good, bad};
  SuiteSummary s = success_conditional_mean(run);
  if (!s.means || s.means->tau != 4.0) {
    why = "failed episode leaked into the summary means";
    return false;
  }
  return true;
}

}  // namespace

int main() {
  std::vector<Check> checks = {
      {"criterion 1: baseline-normalized deltas render exactly",
       crit_normalization},
      {"criterion 2: hand-derived metric oracles", crit_metric_oracles},
      {"criterion 3: metric invariances on 1000 random episodes",
       crit_invariances},
      {"criterion 4: equal success rate, unequal efficiency",
       crit_equal_sr_unequal_eff},
      {"criterion 5: transform codec round trip and jerk direction",
       crit_codec},
      {"criterion 6: quantization and pruning contracts", crit_quant_prune},
      {"criterion 7: analytic gradients match finite differences",
       crit_gradients},
      {"criterion 8: smoothness loss lowers rollout jerk", crit_aux_loss_direction},
      {"criterion 9: evaluation protocol conformance", crit_protocol},
  };
  int failures = 0;
  for (const Check& c : checks) {
    std::string why;
    bool ok = false;
    try {
      ok = c.fn(why);
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (ok) {
      std::printf("[PASS] %s\n", c.name.c_str());
    } else {
      std::printf("[FAIL] %s%s%s\n", c.name.c_str(), why.empty() ? "" : " — ",
                  why.c_str());
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}
