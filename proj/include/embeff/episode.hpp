#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace embeff {

/// One logged timestep. Timestep indices are 1-based and contiguous.
struct StepRecord {
  std::int64_t t = 0;
  std::array<double, 3> p{};          // end-effector position [m]
  std::vector<double> q;              // joint configuration [rad]
  std::optional<std::vector<double>> qdot;  // joint velocity [rad/s]
  std::vector<double> a;              // action vector [controller units]

  bool operator==(const StepRecord&) const = default;
};

/// One rollout, as read from or written to a log file.
struct EpisodeLog {
  std::vector<StepRecord> steps;
  double f = 0.0;       // control frequency [Hz]
  bool success = false;
  std::string task_id;
  std::string suite_id;
  std::string run_tag;

  bool operator==(const EpisodeLog&) const = default;

  std::size_t T() const { return steps.size(); }
  std::size_t dof() const { return steps.empty() ? 0 : steps.front().q.size(); }
  std::size_t action_dim() const {
    return steps.empty() ? 0 : steps.front().a.size();
  }
};

struct SuiteRun {
  std::vector<EpisodeLog> episodes;
  std::size_t N() const { return episodes.size(); }
};

enum class Plane { XY, YZ, XZ };

Plane parse_plane(const std::string& name);  // "xy" | "yz" | "xz"

// Validates all EpisodeLog invariants; throws ValidationError naming the
// first offending step.
void validate_episode(const EpisodeLog& ep);

// Line-delimited log format: header record then one record per step.
EpisodeLog parse_episode(const std::string& content);
std::string serialize_episode(const EpisodeLog& ep);

EpisodeLog load_episode(const std::filesystem::path& file);
void save_episode(const EpisodeLog& ep, const std::filesystem::path& file);

// Fills qdot by forward differences, last value repeated, if absent.
// Idempotent: an episode already carrying qdot is returned unchanged.
EpisodeLog derive_velocities(const EpisodeLog& ep);

std::vector<std::array<double, 2>> project_trajectory(const EpisodeLog& ep,
                                                      Plane plane);

// Suite directory: episode files plus a manifest listing filenames and N.
struct SuiteManifest {
  std::string suite_id;
  std::string run_tag;
  std::vector<std::string> files;
};

SuiteRun load_suite(const std::filesystem::path& dir);
void save_suite(const SuiteRun& run, const std::filesystem::path& dir);
SuiteManifest load_manifest(const std::filesystem::path& dir);

}  // namespace embeff
