#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "embeff/normalize.hpp"
#include "embeff/sim.hpp"

namespace embeff {

/// One expanded simulation job (a scenario entry repeated `repetitions`
/// times becomes that many jobs with derived per-episode seeds).
struct ScenarioEntry {
  TaskSpec task;
  ControllerSpec ctrl;
  double f = 20.0;
  std::size_t repetitions = 1;
  // kind "policy" rollouts are driven by a trained model instead of a
  // built-in controller.
  std::string policy_model;  // empty = built-in controller
};

struct Scenario {
  std::string suite_id;
  std::string run_tag;
  std::uint64_t seed = 0;
  ArmModel arm;
  std::vector<double> q0;  // empty = default rest pose
  std::vector<ScenarioEntry> entries;
};

Scenario load_scenario(const std::filesystem::path& file);

enum class StopRule { Fixed, FirstTenSuccesses };

// Expands and runs a scenario. Fixed mode runs every repetition; first10
// stops after the 10th successful episode.
SuiteRun run_scenario(const Scenario& sc, StopRule stop);

// Per-episode records plus one summary per (suite_id, run_tag), written as a
// flat CSV (columns suite,run,SR,tau,L_ee,L_joint,J,R,n_success,N) and as
// line-delimited JSON with full-precision values at csv_path + ".jsonl".
void write_eval_outputs(const std::vector<std::pair<EpisodeLog, MetricVector>>& episodes,
                        const std::vector<SuiteSummary>& summaries,
                        const std::filesystem::path& csv_path);

// Reads the summary records back from an eval .jsonl file.
std::vector<SuiteSummary> read_summaries(const std::filesystem::path& jsonl);

struct ComparisonReport {
  std::string baseline_tag;
  std::vector<SuiteSummary> baseline;           // one per suite
  std::vector<std::string> variant_tags;
  std::vector<std::vector<NormalizedRow>> rows;  // [variant][suite]
  std::vector<NormalizedRow> aggregated;         // [variant], when >= 2 suites
  std::string provenance;  // JSON blob: input paths, options
};

ComparisonReport build_comparison(const std::vector<SuiteSummary>& baseline,
                                  const std::vector<std::vector<SuiteSummary>>& variants,
                                  bool by_suite);

std::string render_markdown(const ComparisonReport& report);
std::string render_machine_json(const ComparisonReport& report);

// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace embeff
