#include "embeff/policy.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "embeff/errors.hpp"
#include "embeff/rng.hpp"
#include "json.hpp"

namespace embeff {

using nlohmann::json;

std::size_t MlpPolicy::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers)
    n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

MlpPolicy init_policy(std::size_t input_dim,
                      const std::vector<std::size_t>& hidden, std::size_t H,
                      std::size_t k, double f, std::uint64_t seed) {
  if (H < 3) throw ConfigError("chunk horizon H must be >= 3");
  if (input_dim == 0 || k == 0) throw ConfigError("bad policy dimensions");
  MlpPolicy p;
  p.input_dim = input_dim;
  p.H = H;
  p.k = k;
  p.f = f;
  SplitMix64 rng(seed);
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(H * k);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    MlpPolicy::Layer layer;
    auto in = static_cast<Eigen::Index>(dims[l]);
    auto out = static_cast<Eigen::Index>(dims[l + 1]);
    double scale = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    layer.W.resize(out, in);
    for (Eigen::Index i = 0; i < out; ++i)
      for (Eigen::Index j = 0; j < in; ++j)
        layer.W(i, j) = scale * (2.0 * rng.next_unit() - 1.0);
    layer.b = Eigen::VectorXd::Zero(out);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Model policy_to_model(const MlpPolicy& policy) {
  Model m;
  for (std::size_t l = 0; l < policy.layers.size(); ++l) {
    const auto& layer = policy.layers[l];
    WeightTensor w;
    w.name = "layer" + std::to_string(l) + ".weight";
    w.shape = {static_cast<std::size_t>(layer.W.rows()),
               static_cast<std::size_t>(layer.W.cols())};
    w.values.resize(static_cast<std::size_t>(layer.W.size()));
    // row-major on disk
    for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.W.cols(); ++j)
        w.values[static_cast<std::size_t>(i * layer.W.cols() + j)] =
            layer.W(i, j);
    m.tensors.push_back(std::move(w));
    WeightTensor b;
    b.name = "layer" + std::to_string(l) + ".bias";
    b.shape = {static_cast<std::size_t>(layer.b.size())};
    b.values.assign(layer.b.data(), layer.b.data() + layer.b.size());
    m.tensors.push_back(std::move(b));
  }
  m.meta["kind"] = "mlp-policy";
  m.meta["input_dim"] = std::to_string(policy.input_dim);
  m.meta["H"] = std::to_string(policy.H);
  m.meta["k"] = std::to_string(policy.k);
  m.meta["f"] = json(policy.f).dump();
  m.meta["layers"] = std::to_string(policy.layers.size());
  return m;
}

MlpPolicy policy_from_model(const Model& model) {
  MlpPolicy p;
  try {
    p.input_dim = std::stoul(model.meta.at("input_dim"));
    p.H = std::stoul(model.meta.at("H"));
    p.k = std::stoul(model.meta.at("k"));
    p.f = std::stod(model.meta.at("f"));
    std::size_t n_layers = std::stoul(model.meta.at("layers"));
    for (std::size_t l = 0; l < n_layers; ++l) {
      const WeightTensor& w =
          model.tensor("layer" + std::to_string(l) + ".weight");
      const WeightTensor& b =
          model.tensor("layer" + std::to_string(l) + ".bias");
      if (w.shape.size() != 2 || b.shape.size() != 1 ||
          w.shape[0] != b.shape[0])
        throw ConfigError("layer " + std::to_string(l) + ": bad shapes");
      MlpPolicy::Layer layer;
      auto rows = static_cast<Eigen::Index>(w.shape[0]);
      auto cols = static_cast<Eigen::Index>(w.shape[1]);
      layer.W.resize(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
          layer.W(i, j) = w.values[static_cast<std::size_t>(i * cols + j)];
      layer.b = Eigen::Map<const Eigen::VectorXd>(
          b.values.data(), static_cast<Eigen::Index>(b.values.size()));
      p.layers.push_back(std::move(layer));
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model is not a valid mlp-policy: ") +
                      e.what());
  }
  if (p.layers.empty() ||
      p.layers.back().W.rows() != static_cast<Eigen::Index>(p.H * p.k) ||
      p.layers.front().W.cols() != static_cast<Eigen::Index>(p.input_dim))
    throw ConfigError("policy layer shapes do not chain to H*k output");
  for (std::size_t l = 0; l + 1 < p.layers.size(); ++l)
    if (p.layers[l].W.rows() != p.layers[l + 1].W.cols())
      throw ConfigError("policy layer shapes do not chain");
  return p;
}

std::vector<double> make_observation(const std::vector<double>& q,
                                     const std::array<double, 2>& target,
                                     double t_norm) {
  std::vector<double> obs = q;
  obs.push_back(target[0]);
  obs.push_back(target[1]);
  obs.push_back(t_norm);
  return obs;
}

namespace {

// Forward pass caching post-activation values per layer.
Eigen::VectorXd forward_cached(const MlpPolicy& p, const Eigen::VectorXd& obs,
                               std::vector<Eigen::VectorXd>* acts) {
  Eigen::VectorXd y = obs;
  if (acts) acts->clear();
  for (const auto& layer : p.layers) {
    y = (layer.W * y + layer.b).array().tanh().matrix();
    if (acts) acts->push_back(y);
  }
  return y;
}

ActionChunk to_chunk(const MlpPolicy& p, const Eigen::VectorXd& y) {
  ActionChunk c;
  c.H = p.H;
  c.k = p.k;
  c.f = p.f;
  c.values.assign(y.data(), y.data() + y.size());
  return c;
}

}  // namespace

ActionChunk policy_forward(const MlpPolicy& policy,
                           const std::vector<double>& obs) {
  if (obs.size() != policy.input_dim)
    throw ConfigError("observation dimension " + std::to_string(obs.size()) +
                      " does not match policy input " +
                      std::to_string(policy.input_dim));
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(
      obs.data(), static_cast<Eigen::Index>(obs.size()));
  return to_chunk(policy, forward_cached(policy, v, nullptr));
}

double bc_loss(const ActionChunk& pred, const ActionChunk& demo) {
  if (pred.H != demo.H || pred.k != demo.k)
    throw ConfigError("bc_loss: chunk shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    double d = pred.values[i] - demo.values[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.values.size());
}

double jerk_penalty(const ActionChunk& chunk) {
  if (chunk.H < 3) throw ValidationError("jerk_penalty needs H >= 3");
  const double f2 = chunk.f * chunk.f;
  double s = 0.0;
  for (std::size_t t = 1; t + 1 < chunk.H; ++t)
    for (std::size_t j = 0; j < chunk.k; ++j) {
      double dd =
          chunk.at(t + 1, j) - 2.0 * chunk.at(t, j) + chunk.at(t - 1, j);
      s += dd * dd;
    }
  return f2 * f2 / static_cast<double>(chunk.H - 2) * s;
}

double rate_penalty(const ActionChunk& chunk) {
  if (chunk.H < 2) throw ValidationError("rate_penalty needs H >= 2");
  double s = 0.0;
  for (std::size_t t = 0; t + 1 < chunk.H; ++t) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < chunk.k; ++j) {
      double d = chunk.at(t + 1, j) - chunk.at(t, j);
      n2 += d * d;
    }
    s += std::sqrt(n2);
  }
  return s / static_cast<double>(chunk.H - 1);
}

namespace {

// d(jerk_penalty)/d(chunk values), accumulated into g (same layout).
void jerk_penalty_grad(const ActionChunk& chunk, double weight,
                       Eigen::VectorXd& g) {
  const double f2 = chunk.f * chunk.f;
  const double c = 2.0 * weight * f2 * f2 / static_cast<double>(chunk.H - 2);
  for (std::size_t t = 1; t + 1 < chunk.H; ++t)
    for (std::size_t j = 0; j < chunk.k; ++j) {
      double dd =
          chunk.at(t + 1, j) - 2.0 * chunk.at(t, j) + chunk.at(t - 1, j);
      g(static_cast<Eigen::Index>((t + 1) * chunk.k + j)) += c * dd;
      g(static_cast<Eigen::Index>(t * chunk.k + j)) -= 2.0 * c * dd;
      g(static_cast<Eigen::Index>((t - 1) * chunk.k + j)) += c * dd;
    }
}

// Subgradient 0 at zero differences.
void rate_penalty_grad(const ActionChunk& chunk, double weight,
                       Eigen::VectorXd& g) {
  const double c = weight / static_cast<double>(chunk.H - 1);
  for (std::size_t t = 0; t + 1 < chunk.H; ++t) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < chunk.k; ++j) {
      double d = chunk.at(t + 1, j) - chunk.at(t, j);
      n2 += d * d;
    }
    double n = std::sqrt(n2);
    if (n == 0.0) continue;
    for (std::size_t j = 0; j < chunk.k; ++j) {
      double d = chunk.at(t + 1, j) - chunk.at(t, j);
      g(static_cast<Eigen::Index>((t + 1) * chunk.k + j)) += c * d / n;
      g(static_cast<Eigen::Index>(t * chunk.k + j)) -= c * d / n;
    }
  }
}

}  // namespace

LossBreakdown total_loss_grad(const MlpPolicy& policy,
                              const std::vector<TrainSample>& batch,
                              const TrainConfig& cfg,
                              std::vector<MlpPolicy::Layer>& grads) {
  if (batch.empty()) throw ConfigError("empty batch");
  if (cfg.eta < 0.0) throw ConfigError("eta must be >= 0");
  grads.clear();
  for (const auto& layer : policy.layers)
    grads.push_back({Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()),
                     Eigen::VectorXd::Zero(layer.b.size())});
  LossBreakdown loss;
  const double invB = 1.0 / static_cast<double>(batch.size());
  const auto out_dim = static_cast<Eigen::Index>(policy.H * policy.k);
  std::vector<Eigen::VectorXd> acts;
  for (const TrainSample& sample : batch) {
    if (sample.obs.size() != static_cast<Eigen::Index>(policy.input_dim) ||
        sample.demo.size() != out_dim)
      throw ConfigError("training sample dimensions do not match policy");
    Eigen::VectorXd y = forward_cached(policy, sample.obs, &acts);
    ActionChunk pred = to_chunk(policy, y);
    ActionChunk demo = pred;
    demo.values.assign(sample.demo.data(), sample.demo.data() + out_dim);
    loss.bc += invB * bc_loss(pred, demo);
    loss.jerk_term += invB * jerk_penalty(pred);
    loss.rate_term += invB * rate_penalty(pred);

    Eigen::VectorXd dy =
        (2.0 * invB / static_cast<double>(out_dim)) * (y - sample.demo);
    jerk_penalty_grad(pred, cfg.eta * invB, dy);
    rate_penalty_grad(pred, cfg.eta * invB, dy);

    for (std::size_t l = policy.layers.size(); l-- > 0;) {
      const Eigen::VectorXd& out = acts[l];
      Eigen::VectorXd delta =
          dy.cwiseProduct((1.0 - out.array().square()).matrix());
      const Eigen::VectorXd& in =
          (l == 0) ? sample.obs : acts[l - 1];
      grads[l].W.noalias() += delta * in.transpose();
      grads[l].b += delta;
      if (l > 0) dy.noalias() = policy.layers[l].W.transpose() * delta;
    }
  }
  loss.total = loss.bc + cfg.eta * (loss.jerk_term + loss.rate_term);
  return loss;
}

LossBreakdown total_loss(const MlpPolicy& policy,
                         const std::vector<TrainSample>& batch,
                         const TrainConfig& cfg) {
  if (batch.empty()) throw ConfigError("empty batch");
  LossBreakdown loss;
  const double invB = 1.0 / static_cast<double>(batch.size());
  for (const TrainSample& sample : batch) {
    Eigen::VectorXd y = forward_cached(policy, sample.obs, nullptr);
    ActionChunk pred = to_chunk(policy, y);
    ActionChunk demo = pred;
    demo.values.assign(sample.demo.data(),
                       sample.demo.data() + sample.demo.size());
    loss.bc += invB * bc_loss(pred, demo);
    loss.jerk_term += invB * jerk_penalty(pred);
    loss.rate_term += invB * rate_penalty(pred);
  }
  loss.total = loss.bc + cfg.eta * (loss.jerk_term + loss.rate_term);
  return loss;
}

TrainConfig load_train_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open config file " + file.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed config " + file.string());
  TrainConfig cfg;
  cfg.eta = j.value("eta", cfg.eta);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.H = j.value("H", cfg.H);
  cfg.f = j.value("f", cfg.f);
  if (j.contains("hidden"))
    cfg.hidden = j["hidden"].get<std::vector<std::size_t>>();
  if (cfg.eta < 0.0) throw ConfigError("eta must be >= 0");
  return cfg;
}

TrainResult train(const TrainConfig& cfg, const std::vector<TrainSample>& demos,
                  std::size_t input_dim, std::size_t k) {
  if (demos.empty()) throw ConfigError("training needs >= 1 demonstration");
  TrainResult res;
  res.policy = init_policy(input_dim, cfg.hidden, cfg.H, k, cfg.f, cfg.seed);
  std::vector<std::size_t> order(demos.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = cfg.batch_size == 0 ? demos.size() : cfg.batch_size;
  std::vector<MlpPolicy::Layer> grads;
  MlpPolicy checkpoint = res.policy;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Deterministic Fisher-Yates shuffle per epoch.
    SplitMix64 rng(SplitMix64::derive(cfg.seed, epoch + 1));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_u64() % i]);
    LossBreakdown epoch_loss;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < demos.size(); start += bs) {
      std::vector<TrainSample> batch;
      for (std::size_t i = start; i < std::min(start + bs, demos.size()); ++i)
        batch.push_back(demos[order[i]]);
      LossBreakdown l = total_loss_grad(res.policy, batch, cfg, grads);
      if (!std::isfinite(l.total)) {
        res.policy = checkpoint;  // last finite state
        res.diverged = true;
        return res;
      }
      epoch_loss.bc += l.bc;
      epoch_loss.jerk_term += l.jerk_term;
      epoch_loss.rate_term += l.rate_term;
      epoch_loss.total += l.total;
      ++n_batches;
      for (std::size_t li = 0; li < res.policy.layers.size(); ++li) {
        res.policy.layers[li].W -= cfg.lr * grads[li].W;
        res.policy.layers[li].b -= cfg.lr * grads[li].b;
      }
    }
    const double inv = 1.0 / static_cast<double>(n_batches);
    epoch_loss.bc *= inv;
    epoch_loss.jerk_term *= inv;
    epoch_loss.rate_term *= inv;
    epoch_loss.total *= inv;
    res.history.push_back(epoch_loss);
    checkpoint = res.policy;
  }
  return res;
}

double finite_diff_grad_check(const MlpPolicy& policy,
                              const std::vector<TrainSample>& batch,
                              const TrainConfig& cfg, double h,
                              std::size_t n_params, std::uint64_t seed) {
  if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
  std::vector<MlpPolicy::Layer> grads;
  total_loss_grad(policy, batch, cfg, grads);
  SplitMix64 rng(seed);
  MlpPolicy probe = policy;
  double max_err = 0.0;
  const std::size_t total = policy.param_count();
  n_params = std::min(n_params, total);
  for (std::size_t s = 0; s < n_params; ++s) {
    std::size_t flat = rng.next_u64() % total;
    // Locate (layer, weight-or-bias, index).
    std::size_t li = 0, off = flat;
    double* p = nullptr;
    double analytic = 0.0;
    for (; li < probe.layers.size(); ++li) {
      auto wn = static_cast<std::size_t>(probe.layers[li].W.size());
      auto bn = static_cast<std::size_t>(probe.layers[li].b.size());
      if (off < wn) {
        p = probe.layers[li].W.data() + off;
        analytic = grads[li].W.data()[off];
        break;
      }
      off -= wn;
      if (off < bn) {
        p = probe.layers[li].b.data() + off;
        analytic = grads[li].b.data()[off];
        break;
      }
      off -= bn;
    }
    double orig = *p;
    *p = orig + h;
    double lp = total_loss(probe, batch, cfg).total;
    *p = orig - h;
    double lm = total_loss(probe, batch, cfg).total;
    *p = orig;
    double numeric = (lp - lm) / (2.0 * h);
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    max_err = std::max(max_err, std::abs(analytic - numeric) / denom);
  }
  return max_err;
}

EpisodeLog policy_rollout(const ArmModel& arm, const TaskSpec& task,
                          const MlpPolicy& policy, double f,
                          const std::vector<double>& q0) {
  if (policy.k != arm.dof())
    throw ConfigError("policy action dimension does not match arm");
  ActionChunk chunk;
  auto action_fn = [&](std::size_t t, const std::vector<double>& q) {
    std::size_t slot = t % policy.H;
    if (slot == 0) {
      double t_norm = static_cast<double>(t) /
                      static_cast<double>(std::max<std::size_t>(task.T_max, 2) - 1);
      chunk = policy_forward(policy, make_observation(q, task.target, t_norm));
    }
    std::vector<double> a(policy.k);
    for (std::size_t j = 0; j < policy.k; ++j) a[j] = chunk.at(slot, j);
    return a;
  };
  return rollout_custom(arm, task, f, q0, action_fn);
}

std::vector<TrainSample> demos_from_suite(const SuiteRun& run, std::size_t H,
                                          std::size_t stride,
                                          std::size_t t_ref) {
  if (stride == 0) throw ConfigError("stride must be >= 1");
  std::vector<TrainSample> out;
  for (const EpisodeLog& ep : run.episodes) {
    if (!ep.success || ep.T() < H) continue;
    const auto& pT = ep.steps.back().p;
    std::array<double, 2> target{pT[0], pT[1]};
    const std::size_t T = ep.T();
    const std::size_t k = ep.action_dim();
    const std::size_t denom = std::max<std::size_t>(t_ref == 0 ? T : t_ref, 2);
    for (std::size_t start = 0; start + H <= T; start += stride) {
      TrainSample s;
      double t_norm =
          static_cast<double>(start) / static_cast<double>(denom - 1);
      std::vector<double> obs =
          make_observation(ep.steps[start].q, target, t_norm);
      s.obs = Eigen::Map<const Eigen::VectorXd>(
          obs.data(), static_cast<Eigen::Index>(obs.size()));
      s.demo.resize(static_cast<Eigen::Index>(H * k));
      for (std::size_t t = 0; t < H; ++t)
        for (std::size_t j = 0; j < k; ++j)
          s.demo(static_cast<Eigen::Index>(t * k + j)) =
              ep.steps[start + t].a[j];
      out.push_back(std::move(s));
    }
  }
  if (out.empty())
    throw ConfigError("no usable demonstrations (need successful episodes "
                      "with T >= H)");
  return out;
}

}  // namespace embeff
