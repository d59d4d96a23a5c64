#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "embeff/compress.hpp"
#include "embeff/model_io.hpp"
#include "embeff/sim.hpp"

namespace embeff {

/// Tanh MLP mapping (q, target, normalized time) to an H x k action chunk.
/// Every layer applies tanh, so actions stay in (-1, 1) rad/s.
struct MlpPolicy {
  struct Layer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
  };
  std::vector<Layer> layers;
  std::size_t input_dim = 0;
  std::size_t H = 0;  // chunk horizon, >= 3
  std::size_t k = 0;  // action dimension
  double f = 20.0;    // control frequency the chunk penalties assume

  std::size_t param_count() const;
};

MlpPolicy init_policy(std::size_t input_dim,
                      const std::vector<std::size_t>& hidden, std::size_t H,
                      std::size_t k, double f, std::uint64_t seed);

Model policy_to_model(const MlpPolicy& policy);
MlpPolicy policy_from_model(const Model& model);

std::vector<double> make_observation(const std::vector<double>& q,
                                     const std::array<double, 2>& target,
                                     double t_norm);

ActionChunk policy_forward(const MlpPolicy& policy,
                           const std::vector<double>& obs);

double bc_loss(const ActionChunk& pred, const ActionChunk& demo);

// Chunk-level analogues of the episode metrics, with the chunk's rows
// standing in for joint-velocity samples.
double jerk_penalty(const ActionChunk& chunk);  // H >= 3
double rate_penalty(const ActionChunk& chunk);  // H >= 2

struct TrainSample {
  Eigen::VectorXd obs;
  Eigen::VectorXd demo;  // flattened H x k chunk, row-major
};

struct TrainConfig {
  double eta = 0.01;
  std::size_t epochs = 300;
  std::size_t batch_size = 0;  // 0 = full batch
  double lr = 0.05;
  std::uint64_t seed = 1;
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t H = 8;
  double f = 20.0;
};

TrainConfig load_train_config(const std::filesystem::path& file);

struct LossBreakdown {
  double bc = 0.0;
  double jerk_term = 0.0;
  double rate_term = 0.0;
  double total = 0.0;
};

LossBreakdown total_loss(const MlpPolicy& policy,
                         const std::vector<TrainSample>& batch,
                         const TrainConfig& cfg);

// Loss plus analytic gradients with respect to every weight and bias.
LossBreakdown total_loss_grad(const MlpPolicy& policy,
                              const std::vector<TrainSample>& batch,
                              const TrainConfig& cfg,
                              std::vector<MlpPolicy::Layer>& grads);

struct TrainResult {
  MlpPolicy policy;
  std::vector<LossBreakdown> history;  // one entry per epoch
  bool diverged = false;
};

TrainResult train(const TrainConfig& cfg, const std::vector<TrainSample>& demos,
                  std::size_t input_dim, std::size_t k);

// Central-difference check of total_loss_grad over >= n_params sampled
// parameters; returns the max relative error.
double finite_diff_grad_check(const MlpPolicy& policy,
                              const std::vector<TrainSample>& batch,
                              const TrainConfig& cfg, double h,
                              std::size_t n_params = 100,
                              std::uint64_t seed = 7);

// Chunked closed-loop execution of the policy in the simulator: a new chunk
// is predicted every H steps and its rows issued as velocity commands.
EpisodeLog policy_rollout(const ArmModel& arm, const TaskSpec& task,
                          const MlpPolicy& policy, double f,
                          const std::vector<double>& q0 = {});

// Behavior-cloning samples from successful episodes of a suite. The demo
// target is recovered from the final end-effector position; chunks slide
// with the given stride. t_ref sets the step count that normalizes the time
// feature to 1 (0 = each episode's own length); pass the rollout T_max so
// training and execution see the same time scale.
std::vector<TrainSample> demos_from_suite(const SuiteRun& run, std::size_t H,
                                          std::size_t stride = 1,
                                          std::size_t t_ref = 0);

}  // namespace embeff
