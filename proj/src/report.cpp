#include "embeff/report.hpp"

#include <fstream>
#include <sstream>

#include "embeff/errors.hpp"
#include "embeff/policy.hpp"
#include "embeff/rng.hpp"
#include "json.hpp"

namespace embeff {

using nlohmann::json;

namespace {

std::array<double, 2> read_vec2(const json& j, const char* key) {
  auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2)
    throw ParseError(std::string(key) + " must have 2 components");
  return {v[0], v[1]};
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open scenario file " + file.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ParseError("malformed scenario file " + file.string());
  Scenario sc;
  try {
    sc.suite_id = j.at("suite_id").get<std::string>();
    sc.run_tag = j.at("run_tag").get<std::string>();
    sc.seed = j.value("seed", std::uint64_t{0});
    const json& arm = j.at("arm");
    sc.arm.link_lengths = arm.at("link_lengths").get<std::vector<double>>();
    for (const auto& lim : arm.at("joint_limits")) {
      auto v = lim.get<std::vector<double>>();
      if (v.size() != 2) throw ParseError("joint limit needs [lo, hi]");
      sc.arm.joint_limits.push_back({v[0], v[1]});
    }
    if (arm.contains("base")) sc.arm.base = read_vec2(arm, "base");
    if (j.contains("q0")) sc.q0 = j["q0"].get<std::vector<double>>();
    for (const json& e : j.at("entries")) {
      ScenarioEntry entry;
      const json& t = e.at("task");
      entry.task.target = read_vec2(t, "target");
      entry.task.epsilon = t.value("epsilon", entry.task.epsilon);
      entry.task.T_max = t.value("T_max", entry.task.T_max);
      entry.task.g_id = t.value("g_id", std::string("task"));
      const json& c = e.at("controller");
      std::string kind = c.at("kind").get<std::string>();
      if (kind == "policy") {
        entry.policy_model = c.at("model").get<std::string>();
      } else {
        entry.ctrl.kind = parse_controller_kind(kind);
        entry.ctrl.noise_std = c.value("noise_std", 0.0);
        entry.ctrl.speed = c.value("speed", 1.0);
      }
      entry.f = e.value("f", 20.0);
      entry.repetitions = e.value("repetitions", std::size_t{1});
      sc.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ParseError("bad scenario " + file.string() + ": " + e.what());
  }
  validate_arm(sc.arm);
  if (sc.entries.empty()) throw ConfigError("scenario has no entries");
  for (const auto& e : sc.entries) validate_task(sc.arm, e.task);
  return sc;
}

SuiteRun run_scenario(const Scenario& sc, StopRule stop) {
  SuiteRun run;
  std::size_t episode_index = 0;
  std::size_t n_success = 0;
  for (const ScenarioEntry& entry : sc.entries) {
    std::optional<MlpPolicy> policy;
    if (!entry.policy_model.empty())
      policy = policy_from_model(load_model(entry.policy_model));
    for (std::size_t rep = 0; rep < entry.repetitions; ++rep) {
      EpisodeLog ep;
      if (policy) {
        ep = policy_rollout(sc.arm, entry.task, *policy, entry.f, sc.q0);
      } else {
        ControllerSpec ctrl = entry.ctrl;
        ctrl.seed = SplitMix64::derive(sc.seed, episode_index);
        ep = rollout(sc.arm, entry.task, ctrl, entry.f, sc.q0);
      }
      ep.suite_id = sc.suite_id;
      ep.run_tag = sc.run_tag;
      ++episode_index;
      n_success += ep.success ? 1 : 0;
      run.episodes.push_back(std::move(ep));
      if (stop == StopRule::FirstTenSuccesses && n_success >= 10) return run;
    }
  }
  return run;
}

namespace {

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json summary_to_json(const SuiteSummary& s) {
  json j = {{"type", "summary"}, {"suite", s.suite_id}, {"run", s.run_tag},
            {"SR", s.SR},        {"n_success", s.n_success}, {"N", s.N}};
  if (s.means) {
    j["means"] = {{"tau", s.means->tau},
                  {"L_ee", s.means->L_ee},
                  {"L_joint", s.means->L_joint},
                  {"J", s.means->J},
                  {"R", s.means->R}};
  } else {
    j["undefined"] = true;
  }
  return j;
}

}  // namespace

void write_eval_outputs(
    const std::vector<std::pair<EpisodeLog, MetricVector>>& episodes,
    const std::vector<SuiteSummary>& summaries,
    const std::filesystem::path& csv_path) {
  std::ostringstream csv;
  csv << "suite,run,SR,tau,L_ee,L_joint,J,R,n_success,N\n";
  std::ostringstream jsonl;
  for (const auto& [ep, m] : episodes) {
    csv << ep.suite_id << ',' << ep.run_tag << ',' << (ep.success ? 1 : 0)
        << ',' << full(m.tau) << ',' << full(m.L_ee) << ',' << full(m.L_joint)
        << ',' << full(m.J) << ',' << full(m.R) << ",,\n";
    json j = {{"type", "episode"},   {"suite", ep.suite_id},
              {"run", ep.run_tag},   {"task", ep.task_id},
              {"success", ep.success}, {"tau", m.tau},
              {"L_ee", m.L_ee},      {"L_joint", m.L_joint},
              {"J", m.J},            {"R", m.R}};
    jsonl << j.dump() << '\n';
  }
  for (const SuiteSummary& s : summaries) {
    csv << s.suite_id << ',' << s.run_tag << ',' << full(s.SR) << ',';
    if (s.means)
      csv << full(s.means->tau) << ',' << full(s.means->L_ee) << ','
          << full(s.means->L_joint) << ',' << full(s.means->J) << ','
          << full(s.means->R);
    else
      csv << "undef,undef,undef,undef,undef";
    csv << ',' << s.n_success << ',' << s.N << '\n';
    jsonl << summary_to_json(s).dump() << '\n';
  }
  write_file_atomic(csv_path, csv.str());
  write_file_atomic(csv_path.string() + ".jsonl", jsonl.str());
}

std::vector<SuiteSummary> read_summaries(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw ParseError("cannot open summary file " + jsonl.string());
  std::vector<SuiteSummary> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ParseError("malformed record in " + jsonl.string());
    if (j.value("type", "") != "summary") continue;
    SuiteSummary s;
    s.suite_id = j.at("suite").get<std::string>();
    s.run_tag = j.at("run").get<std::string>();
    s.SR = j.at("SR").get<double>();
    s.n_success = j.at("n_success").get<std::size_t>();
    s.N = j.at("N").get<std::size_t>();
    if (j.contains("means")) {
      MetricVector m;
      m.tau = j["means"].at("tau").get<double>();
      m.L_ee = j["means"].at("L_ee").get<double>();
      m.L_joint = j["means"].at("L_joint").get<double>();
      m.J = j["means"].at("J").get<double>();
      m.R = j["means"].at("R").get<double>();
      s.means = m;
    }
    out.push_back(std::move(s));
  }
  if (out.empty())
    throw ParseError("no summary records in " + jsonl.string());
  return out;
}

ComparisonReport build_comparison(
    const std::vector<SuiteSummary>& baseline,
    const std::vector<std::vector<SuiteSummary>>& variants, bool by_suite) {
  if (baseline.empty()) throw ConfigError("baseline has no summaries");
  ComparisonReport rep;
  rep.baseline_tag = baseline.front().run_tag;
  rep.baseline = baseline;
  for (const auto& var : variants) {
    if (var.empty()) throw ConfigError("variant has no summaries");
    rep.variant_tags.push_back(var.front().run_tag);
    std::vector<NormalizedRow> rows;
    for (const SuiteSummary& b : baseline) {
      const SuiteSummary* match = nullptr;
      for (const SuiteSummary& v : var)
        if (v.suite_id == b.suite_id) match = &v;
      if (!match) {
        if (by_suite)
          throw ConfigError("variant '" + var.front().run_tag +
                            "' has no summary for suite '" + b.suite_id + "'");
        continue;
      }
      rows.push_back(normalize_to_baseline(b, *match));
    }
    if (rows.empty()) {
      // No suite ids line up; fall back to positional pairing.
      rows.push_back(normalize_to_baseline(baseline.front(), var.front()));
    }
    if (rows.size() >= 2)
      rep.aggregated.push_back(aggregate_over_suites(rows));
    rep.rows.push_back(std::move(rows));
  }
  return rep;
}

namespace {

void render_table(std::ostringstream& out, const std::string& title,
                  const std::vector<std::string>& col_tags,
                  const std::vector<const NormalizedRow*>& cols,
                  bool normalized_view) {
  out << "### " << title << "\n\n";
  out << "| Metric | Baseline |";
  for (const auto& tag : col_tags) out << ' ' << tag << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < col_tags.size(); ++i) out << "---|";
  out << '\n';
  out << "| SR (%) | ";
  out << (cols.empty() ? "" : fmt_one_decimal(100.0 * cols[0]->sr_baseline));
  out << " |";
  for (const NormalizedRow* r : cols)
    out << ' ' << fmt_sr_cell(r->sr_variant, r->sr_delta_points()) << " |";
  out << '\n';
  for (std::size_t mi = 0; mi < kMetricNames.size(); ++mi) {
    if (normalized_view) {
      out << "| Norm. " << kMetricNames[mi] << " (%) | 100 |";
      for (const NormalizedRow* r : cols) {
        std::string cell = fmt_norm_cell(r->normalized[mi]);
        if (r->suites_counted[mi] > 0 &&
            r->suites_counted[mi] < r->suites_total)
          cell += " [" + std::to_string(r->suites_counted[mi]) + "/" +
                  std::to_string(r->suites_total) + " suites]";
        out << ' ' << cell << " |";
      }
    } else {
      out << "| " << kMetricNames[mi] << " | ";
      out << (cols.empty() || !cols[0]->raw_baseline[mi]
                  ? std::string("undef")
                  : fmt_one_decimal(*cols[0]->raw_baseline[mi]));
      out << " |";
      for (const NormalizedRow* r : cols)
        out << ' ' << fmt_raw_cell(r->raw[mi], r->normalized[mi]) << " |";
    }
    out << '\n';
  }
  out << '\n';
}

}  // namespace

std::string render_markdown(const ComparisonReport& rep) {
  std::ostringstream out;
  out << "# Comparison report\n\nBaseline: " << rep.baseline_tag << "\n\n";
  // One section per suite present in the baseline.
  for (std::size_t si = 0; si < rep.baseline.size(); ++si) {
    const std::string& suite = rep.baseline[si].suite_id;
    std::vector<const NormalizedRow*> cols;
    std::vector<std::string> tags;
    for (std::size_t vi = 0; vi < rep.rows.size(); ++vi)
      for (const NormalizedRow& r : rep.rows[vi])
        if (r.suite_id == suite || rep.baseline.size() == 1) {
          cols.push_back(&r);
          tags.push_back(rep.variant_tags[vi]);
          break;
        }
    if (cols.empty()) continue;
    render_table(out, "Suite " + suite + " (success-conditional means)", tags, cols, false);
    render_table(out, "Suite " + suite + " (normalized, baseline = 100)", tags, cols, true);
  }
  if (!rep.aggregated.empty()) {
    std::vector<const NormalizedRow*> cols;
    for (const NormalizedRow& r : rep.aggregated) cols.push_back(&r);
    render_table(out, "Aggregated over suites (equal-weight mean)",
                 rep.variant_tags, cols, true);
  }
  if (!rep.provenance.empty())
    out << "Provenance: `" << rep.provenance << "`\n";
  return out.str();
}

std::string render_machine_json(const ComparisonReport& rep) {
  json j;
  j["baseline_tag"] = rep.baseline_tag;
  j["baseline"] = json::array();
  for (const SuiteSummary& s : rep.baseline) j["baseline"].push_back(summary_to_json(s));
  j["variants"] = json::array();
  for (std::size_t vi = 0; vi < rep.rows.size(); ++vi) {
    json v;
    v["run"] = rep.variant_tags[vi];
    v["suites"] = json::array();
    auto row_json = [](const NormalizedRow& r) {
      json o = {{"suite", r.suite_id},
                {"run", r.run_tag},
                {"sr_baseline", r.sr_baseline},
                {"sr_variant", r.sr_variant},
                {"sr_delta_points", r.sr_delta_points()},
                {"suites_total", r.suites_total}};
      for (std::size_t mi = 0; mi < kMetricNames.size(); ++mi) {
        json m;
        if (r.normalized[mi]) {
          m["normalized"] = *r.normalized[mi];
          m["delta"] = *r.normalized[mi] - 100.0;
        } else {
          m["undefined"] = true;
        }
        if (r.raw[mi]) m["raw"] = *r.raw[mi];
        if (r.raw_baseline[mi]) m["raw_baseline"] = *r.raw_baseline[mi];
        m["suites_counted"] = r.suites_counted[mi];
        o[kMetricNames[mi]] = m;
      }
      return o;
    };
    for (const NormalizedRow& r : rep.rows[vi]) v["suites"].push_back(row_json(r));
    if (vi < rep.aggregated.size()) v["aggregated"] = row_json(rep.aggregated[vi]);
    j["variants"].push_back(v);
  }
  if (!rep.provenance.empty())
    j["provenance"] = json::parse(rep.provenance, nullptr, false);
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace embeff
