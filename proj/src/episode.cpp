#include "embeff/episode.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "embeff/errors.hpp"
#include "json.hpp"

namespace embeff {

using nlohmann::json;

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

std::vector<double> read_vec(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_array())
    throw ParseError("line " + std::to_string(line) + ": missing array field '" +
                     key + "'");
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& x : j[key]) {
    if (!x.is_number())
      throw ParseError("line " + std::to_string(line) + ": non-numeric entry in '" +
                       key + "'");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

Plane parse_plane(const std::string& name) {
  if (name == "xy" || name == "XY") return Plane::XY;
  if (name == "yz" || name == "YZ") return Plane::YZ;
  if (name == "xz" || name == "XZ") return Plane::XZ;
  throw ConfigError("unknown plane '" + name + "' (expected xy, yz, or xz)");
}

void validate_episode(const EpisodeLog& ep) {
  if (ep.steps.empty()) throw ValidationError("episode has no steps (T >= 1 required)");
  if (!(std::isfinite(ep.f) && ep.f > 0.0))
    throw ValidationError("control frequency must be finite and positive, got " +
                          std::to_string(ep.f));
  const std::size_t d = ep.steps.front().q.size();
  const std::size_t k = ep.steps.front().a.size();
  for (std::size_t i = 0; i < ep.steps.size(); ++i) {
    const StepRecord& s = ep.steps[i];
    const std::string where = "step " + std::to_string(i + 1);
    if (s.t != static_cast<std::int64_t>(i) + 1)
      throw ValidationError(where + ": timestep index " + std::to_string(s.t) +
                            " (expected " + std::to_string(i + 1) + ")");
    if (s.q.size() != d)
      throw ValidationError(where + ": joint dimension " +
                            std::to_string(s.q.size()) + " after " +
                            std::to_string(d));
    if (s.a.size() != k)
      throw ValidationError(where + ": action dimension " +
                            std::to_string(s.a.size()) + " after " +
                            std::to_string(k));
    if (s.qdot && s.qdot->size() != d)
      throw ValidationError(where + ": velocity dimension " +
                            std::to_string(s.qdot->size()) + " after " +
                            std::to_string(d));
    for (double x : s.p)
      if (!std::isfinite(x)) throw ValidationError(where + ": non-finite p");
    if (!all_finite(s.q)) throw ValidationError(where + ": non-finite q");
    if (!all_finite(s.a)) throw ValidationError(where + ": non-finite a");
    if (s.qdot && !all_finite(*s.qdot))
      throw ValidationError(where + ": non-finite qdot");
  }
}

EpisodeLog parse_episode(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  EpisodeLog ep;
  bool have_header = false;
  std::size_t d = 0, k = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ParseError("line " + std::to_string(lineno) + ": malformed record");
    if (!have_header) {
      try {
        ep.f = j.at("f").get<double>();
        ep.success = j.at("success").get<bool>();
        ep.task_id = j.at("task_id").get<std::string>();
        ep.suite_id = j.at("suite_id").get<std::string>();
        ep.run_tag = j.at("run_tag").get<std::string>();
        d = j.at("d").get<std::size_t>();
        k = j.at("k").get<std::size_t>();
      } catch (const json::exception& e) {
        throw ParseError("line 1: bad header: " + std::string(e.what()));
      }
      have_header = true;
      continue;
    }
    StepRecord s;
    if (!j.contains("t") || !j["t"].is_number_integer())
      throw ParseError("line " + std::to_string(lineno) + ": missing step index t");
    s.t = j["t"].get<std::int64_t>();
    std::vector<double> p = read_vec(j, "p", lineno);
    if (p.size() != 3)
      throw ParseError("line " + std::to_string(lineno) + ": p must have 3 components");
    s.p = {p[0], p[1], p[2]};
    s.q = read_vec(j, "q", lineno);
    s.a = read_vec(j, "a", lineno);
    if (j.contains("qdot")) s.qdot = read_vec(j, "qdot", lineno);
    ep.steps.push_back(std::move(s));
  }
  if (!have_header) throw ParseError("empty log: missing header record");
  if (ep.steps.empty()) throw ParseError("log has a header but no steps");
  if (ep.steps.front().q.size() != d)
    throw ValidationError("step 1: joint dimension " +
                          std::to_string(ep.steps.front().q.size()) +
                          " does not match header d=" + std::to_string(d));
  if (ep.steps.front().a.size() != k)
    throw ValidationError("step 1: action dimension " +
                          std::to_string(ep.steps.front().a.size()) +
                          " does not match header k=" + std::to_string(k));
  validate_episode(ep);
  return ep;
}

std::string serialize_episode(const EpisodeLog& ep) {
  validate_episode(ep);
  std::string out;
  json header = {{"f", ep.f},
                 {"success", ep.success},
                 {"task_id", ep.task_id},
                 {"suite_id", ep.suite_id},
                 {"run_tag", ep.run_tag},
                 {"d", ep.dof()},
                 {"k", ep.action_dim()}};
  out += header.dump();
  out += '\n';
  for (const StepRecord& s : ep.steps) {
    json j = {{"t", s.t}, {"p", s.p}, {"q", s.q}, {"a", s.a}};
    if (s.qdot) j["qdot"] = *s.qdot;
    out += j.dump();
    out += '\n';
  }
  return out;
}

EpisodeLog load_episode(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open episode file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_episode(buf.str());
  } catch (const std::runtime_error& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
}

void save_episode(const EpisodeLog& ep, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write episode file " + file.string());
  out << serialize_episode(ep);
}

EpisodeLog derive_velocities(const EpisodeLog& ep) {
  validate_episode(ep);
  if (ep.steps.front().qdot) return ep;
  if (ep.T() < 2)
    throw ValidationError("derive_velocities needs T >= 2, got T=" +
                          std::to_string(ep.T()));
  EpisodeLog out = ep;
  const std::size_t T = out.T();
  const std::size_t d = out.dof();
  for (std::size_t i = 0; i + 1 < T; ++i) {
    std::vector<double> v(d);
    for (std::size_t j = 0; j < d; ++j)
      v[j] = out.f * (out.steps[i + 1].q[j] - out.steps[i].q[j]);
    out.steps[i].qdot = std::move(v);
  }
  out.steps[T - 1].qdot = out.steps[T - 2].qdot;  // last value repeated
  return out;
}

std::vector<std::array<double, 2>> project_trajectory(const EpisodeLog& ep,
                                                      Plane plane) {
  validate_episode(ep);
  std::size_t u = 0, v = 1;
  switch (plane) {
    case Plane::XY: u = 0; v = 1; break;
    case Plane::YZ: u = 1; v = 2; break;
    case Plane::XZ: u = 0; v = 2; break;
  }
  std::vector<std::array<double, 2>> out;
  out.reserve(ep.T());
  for (const StepRecord& s : ep.steps) out.push_back({s.p[u], s.p[v]});
  return out;
}

SuiteManifest load_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ParseError("no manifest.json in " + dir.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed manifest in " + dir.string());
  SuiteManifest m;
  try {
    m.suite_id = j.at("suite_id").get<std::string>();
    m.run_tag = j.at("run_tag").get<std::string>();
    m.files = j.at("files").get<std::vector<std::string>>();
    if (j.at("N").get<std::size_t>() != m.files.size())
      throw ParseError("manifest N does not match file count in " + dir.string());
  } catch (const json::exception& e) {
    throw ParseError("bad manifest in " + dir.string() + ": " + e.what());
  }
  return m;
}

SuiteRun load_suite(const std::filesystem::path& dir) {
  SuiteManifest m = load_manifest(dir);
  SuiteRun run;
  for (const std::string& f : m.files) {
    EpisodeLog ep = load_episode(dir / f);
    if (ep.suite_id != m.suite_id || ep.run_tag != m.run_tag)
      throw ValidationError(f + ": suite_id/run_tag does not match manifest");
    run.episodes.push_back(std::move(ep));
  }
  if (run.episodes.empty())
    throw ValidationError("suite " + dir.string() + " has no episodes");
  return run;
}

void save_suite(const SuiteRun& run, const std::filesystem::path& dir) {
  if (run.episodes.empty()) throw ValidationError("cannot save an empty suite");
  std::filesystem::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < run.episodes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "episode_%04zu.jsonl", i);
    save_episode(run.episodes[i], dir / name);
    files.push_back(name);
  }
  json m = {{"suite_id", run.episodes.front().suite_id},
            {"run_tag", run.episodes.front().run_tag},
            {"N", run.episodes.size()},
            {"files", files}};
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

}  // namespace embeff
