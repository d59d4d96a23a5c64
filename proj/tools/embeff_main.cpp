// embeff: simulate suites, evaluate rollout logs, compress policies, train,
// and emit baseline-normalized comparison reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "embeff/compress.hpp"
#include "embeff/episode.hpp"
#include "embeff/errors.hpp"
#include "embeff/metrics.hpp"
#include "embeff/model_io.hpp"
#include "embeff/policy.hpp"
#include "embeff/report.hpp"
#include "embeff/sim.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace embeff;

namespace {

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 const std::string& stop_mode) {
  StopRule stop;
  if (stop_mode == "fixed")
    stop = StopRule::Fixed;
  else if (stop_mode == "first10")
    stop = StopRule::FirstTenSuccesses;
  else
    throw ConfigError("--stop must be 'fixed' or 'first10'");
  if (fs::exists(out_dir))
    throw ConfigError("output directory already exists: " + out_dir);
  Scenario sc = load_scenario(scenario_path);
  SuiteRun run = run_scenario(sc, stop);
  fs::path tmp = out_dir + ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  try {
    save_suite(run, tmp);
    fs::rename(tmp, out_dir);
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  std::cout << "wrote " << run.N() << " episodes to " << out_dir << "\n";
  return 0;
}

// A suite dir holds manifest.json directly, or subdirectories that do.
std::vector<fs::path> find_suite_dirs(const fs::path& root) {
  if (fs::exists(root / "manifest.json")) return {root};
  std::vector<fs::path> dirs;
  if (fs::is_directory(root))
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory() && fs::exists(e.path() / "manifest.json"))
        dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty())
    throw ConfigError("no suite manifest found under " + root.string());
  return dirs;
}

int cmd_eval(const std::string& suite_dir, const std::string& out_path) {
  std::vector<std::pair<EpisodeLog, MetricVector>> episodes;
  std::vector<SuiteSummary> summaries;
  std::vector<std::string> failures;
  for (const fs::path& dir : find_suite_dirs(suite_dir)) {
    SuiteManifest manifest = load_manifest(dir);
    SuiteRun run;
    for (const std::string& f : manifest.files) {
      try {
        EpisodeLog ep = load_episode(dir / f);
        episodes.emplace_back(ep, episode_metrics(ep));
        run.episodes.push_back(std::move(ep));
      } catch (const std::runtime_error& e) {
        failures.push_back(e.what());
      }
    }
    if (!run.episodes.empty())
      summaries.push_back(success_conditional_mean(run));
  }
  write_eval_outputs(episodes, summaries, out_path);
  for (const std::string& f : failures) std::cerr << "error: " << f << "\n";
  std::cout << "evaluated " << episodes.size() << " episodes, "
            << summaries.size() << " summaries -> " << out_path << "\n";
  return failures.empty() ? 0 : 2;
}

int cmd_compare(const std::string& baseline_path,
                const std::vector<std::string>& variant_paths, bool by_suite,
                const std::string& out_path) {
  std::vector<SuiteSummary> baseline = read_summaries(baseline_path);
  std::vector<std::vector<SuiteSummary>> variants;
  for (const auto& p : variant_paths) variants.push_back(read_summaries(p));
  ComparisonReport rep = build_comparison(baseline, variants, by_suite);
  json prov = {{"baseline", baseline_path},
               {"variants", variant_paths},
               {"by_suite", by_suite}};
  rep.provenance = prov.dump();
  write_file_atomic(out_path, render_markdown(rep));
  write_file_atomic(out_path + ".json", render_machine_json(rep));
  std::cout << "wrote " << out_path << " and " << out_path << ".json\n";
  return 0;
}

int cmd_compress(const std::string& model_path, const std::string& out_path,
                 CLI::App* sub, double prune_ratio, const std::string& scope,
                 int quant_bits, double token_ratio,
                 const std::string& codec_spec) {
  Model model = load_model(model_path);
  json prov = {{"input", model_path}};
  if (sub->count("--prune")) {
    PruneSpec spec;
    spec.ratio = prune_ratio;
    spec.scope = scope == "global" ? PruneScope::Global : PruneScope::PerTensor;
    model.tensors = magnitude_prune(model.tensors, spec);
    prov["op"] = "prune";
    prov["ratio"] = prune_ratio;
    prov["scope"] = scope;
  } else if (sub->count("--quant-bits")) {
    QuantSpec spec;
    spec.bits = quant_bits;
    for (auto& t : model.tensors) t = fake_quantize(t, spec);
    prov["op"] = "quantize";
    prov["bits"] = quant_bits;
  } else if (sub->count("--token-prune")) {
    // Rows of 2-D tensors act as tokens; 1-D tensors pass through.
    for (auto& t : model.tensors) {
      if (t.shape.size() != 2) continue;
      TokenSet ts;
      ts.n = t.shape[0];
      ts.e = t.shape[1];
      ts.embeddings = t.values;
      TokenSet pruned = token_prune(ts, token_ratio);
      t.shape[0] = pruned.n;
      t.values = std::move(pruned.embeddings);
    }
    prov["op"] = "token-prune";
    prov["ratio"] = token_ratio;
  } else if (sub->count("--action-codec")) {
    std::size_t keep = 0;
    double qstep = 0.0;
    if (std::sscanf(codec_spec.c_str(), "keep=%zu,qstep=%lf", &keep, &qstep) != 2)
      throw ConfigError("--action-codec expects keep=K,qstep=S");
    for (auto& t : model.tensors) {
      ActionChunk chunk;
      chunk.H = t.shape[0];
      chunk.k = t.shape.size() == 2 ? t.shape[1] : 1;
      chunk.f = 1.0;
      chunk.values = t.values;
      t.values =
          reconstruct_action_chunk(compress_action_chunk(chunk, qstep, keep))
              .values;
    }
    prov["op"] = "action-codec";
    prov["keep"] = keep;
    prov["qstep"] = qstep;
  } else {
    throw ConfigError(
        "compress needs one of --prune, --quant-bits, --token-prune, "
        "--action-codec");
  }
  model.meta["compress"] = prov.dump();
  save_model(model, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& demos_dir,
              const std::string& out_path, CLI::App* sub, double eta,
              std::uint64_t seed) {
  TrainConfig cfg = load_train_config(config_path);
  if (sub->count("--eta")) cfg.eta = eta;
  if (sub->count("--seed")) cfg.seed = seed;
  SuiteRun demo_run = load_suite(demos_dir);
  cfg.f = demo_run.episodes.front().f;
  const std::size_t d = demo_run.episodes.front().dof();
  const std::size_t k = demo_run.episodes.front().action_dim();
  std::vector<TrainSample> samples = demos_from_suite(demo_run, cfg.H);
  TrainResult res = train(cfg, samples, d + 3, k);
  if (res.diverged)
    std::cerr << "warning: training diverged; wrote last finite checkpoint\n";
  Model model = policy_to_model(res.policy);
  json prov = {{"config", config_path}, {"demos", demos_dir},
               {"eta", cfg.eta},        {"seed", cfg.seed},
               {"epochs", cfg.epochs},  {"lr", cfg.lr},
               {"samples", samples.size()}};
  model.meta["train"] = prov.dump();
  save_model(model, out_path);
  std::ostringstream csv;
  csv << "epoch,bc,jerk_term,rate_term,total\n";
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    const LossBreakdown& l = res.history[i];
    csv << i << ',' << l.bc << ',' << l.jerk_term << ',' << l.rate_term << ','
        << l.total << '\n';
  }
  write_file_atomic(out_path + ".loss.csv", csv.str());
  std::cout << "wrote " << out_path << " and " << out_path << ".loss.csv\n";
  return res.diverged ? 2 : 0;
}

int cmd_plotdata(const std::string& suite_dir, const std::string& plane_name,
                 const std::string& out_dir) {
  Plane plane = parse_plane(plane_name);
  fs::create_directories(out_dir);
  std::size_t n = 0;
  for (const fs::path& dir : find_suite_dirs(suite_dir)) {
    SuiteManifest manifest = load_manifest(dir);
    for (const std::string& f : manifest.files) {
      EpisodeLog ep = load_episode(dir / f);
      auto pts = project_trajectory(ep, plane);
      std::ostringstream csv;
      csv << "t,u,v\n";
      char buf[80];
      for (std::size_t t = 0; t < pts.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", t + 1,
                      pts[t][0], pts[t][1]);
        csv << buf;
      }
      fs::path name = fs::path(f).stem();
      name += "_" + plane_name + ".csv";
      write_file_atomic(fs::path(out_dir) / name, csv.str());
      ++n;
    }
  }
  std::cout << "wrote " << n << " trajectory files to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embodied-efficiency metric toolkit"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Run a scenario into a suite dir");
  std::string scenario, sim_out, stop_mode = "fixed";
  sim->add_option("--scenario", scenario, "Scenario JSON file")->required();
  sim->add_option("--out", sim_out, "Output suite directory")->required();
  sim->add_option("--stop", stop_mode, "Stopping rule: fixed|first10");

  auto* ev = app.add_subcommand("eval", "Compute metrics over a suite");
  std::string ev_suite, ev_out;
  ev->add_option("--suite", ev_suite, "Suite directory")->required();
  ev->add_option("--out", ev_out, "Output CSV path")->required();

  auto* cmp = app.add_subcommand("compare", "Baseline-normalized report");
  std::string cmp_baseline, cmp_out;
  std::vector<std::string> cmp_variants;
  bool by_suite = false;
  cmp->add_option("--baseline", cmp_baseline, "Baseline summary .jsonl")->required();
  cmp->add_option("--variant", cmp_variants, "Variant summary .jsonl")->required();
  cmp->add_flag("--by-suite", by_suite, "Require per-suite pairing");
  cmp->add_option("--out", cmp_out, "Output Markdown path")->required();

  auto* cp = app.add_subcommand("compress", "Transform a model file");
  std::string cp_model, cp_out, cp_scope = "per_tensor", cp_codec;
  double cp_prune = 0.0, cp_token = 0.0;
  int cp_bits = 8;
  cp->add_option("--model", cp_model, "Input model file")->required();
  cp->add_option("--prune", cp_prune, "Magnitude-prune ratio in [0,1)");
  cp->add_option("--scope", cp_scope, "Prune scope: per_tensor|global");
  cp->add_option("--quant-bits", cp_bits, "Fake-quantize bit width");
  cp->add_option("--token-prune", cp_token, "Token prune ratio in [0,1)");
  cp->add_option("--action-codec", cp_codec, "keep=K,qstep=S");
  cp->add_option("--out", cp_out, "Output model file")->required();

  auto* tr = app.add_subcommand("train", "Behavior-clone a policy");
  std::string tr_config, tr_demos, tr_out;
  double tr_eta = 0.01;
  std::uint64_t tr_seed = 1;
  tr->add_option("--config", tr_config, "Training config JSON")->required();
  tr->add_option("--demos", tr_demos, "Demonstration suite directory")->required();
  tr->add_option("--out", tr_out, "Output model file")->required();
  tr->add_option("--eta", tr_eta, "Auxiliary loss weight");
  tr->add_option("--seed", tr_seed, "Training seed");

  auto* pd = app.add_subcommand("plotdata", "Project trajectories to a plane");
  std::string pd_suite, pd_plane, pd_out;
  pd->add_option("--suite", pd_suite, "Suite directory")->required();
  pd->add_option("--plane", pd_plane, "xy|yz|xz")->required();
  pd->add_option("--out", pd_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(scenario, sim_out, stop_mode);
    if (ev->parsed()) return cmd_eval(ev_suite, ev_out);
    if (cmp->parsed())
      return cmd_compare(cmp_baseline, cmp_variants, by_suite, cmp_out);
    if (cp->parsed())
      return cmd_compress(cp_model, cp_out, cp, cp_prune, cp_scope, cp_bits,
                          cp_token, cp_codec);
    if (tr->parsed())
      return cmd_train(tr_config, tr_demos, tr_out, tr, tr_eta, tr_seed);
    if (pd->parsed()) return cmd_plotdata(pd_suite, pd_plane, pd_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
