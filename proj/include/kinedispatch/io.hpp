#pragma once

// JSON / JSON-lines formats for tables, configs, trajectory logs, profiles,
// calibration samples and dispatch schedules. Doubles are written in their
// shortest round-trip form, so a replayed log reproduces the exact values.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinedispatch/calibration.hpp"
#include "kinedispatch/dispatcher.hpp"
#include "kinedispatch/envpolicy.hpp"
#include "kinedispatch/harness.hpp"
#include "kinedispatch/profiler.hpp"

namespace kinedispatch::io {

using Json = nlohmann::json;

Json to_json(const CostModel& c);
CostModel cost_model_from_json(const Json& j);

/// Keys: theta_24, theta_48, theta_fp, lambda, K, D_acc, eta, W_macro,
/// W_micro, H, cost_model. Θ is null until calibrated.
Json to_json(const CalibrationTable& t);
CalibrationTable table_from_json(const Json& j);

/// Missing keys keep their defaults; unknown keys are rejected.
Json to_json(const EnvConfig& c);
EnvConfig env_config_from_json(const Json& j);

Json to_json(const Action& a);  // [x, y, z, rx, ry, rz, gripper]
Action action_from_json(const Json& j);

Json to_json(const TrajectoryRecord& r, std::uint64_t seed);
TrajectoryRecord trajectory_record_from_json(const Json& j);
Json to_json(const EpisodeResult& r, std::uint64_t seed);
EpisodeResult episode_result_from_json(const Json& j);
Json to_json(const ProfileRecord& r);
Json to_json(const CalibrationSample& s);
CalibrationSample sample_from_json(const Json& j);
Json to_json(const ScheduleEntry& e);
Json to_json(const ModeSummary& m);
Json to_json(const SuiteReport& r);

/// Tracker buffers + dispatcher state; the runtime footprint of one stream.
Json state_to_json(const KinematicTracker& tracker, const DispatcherState& dispatcher);
std::pair<KinematicTracker, DispatcherState> state_from_json(const Json& j);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// One object per non-empty line. Malformed lines throw InvalidInput naming
/// the file and 1-based line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<Json>& lines);

/// A simulate output: one "run" header, then per seed its "step" records
/// followed by one "episode" line.
struct RunLog {
  std::string mode;
  double theta_fp = 0.0;
  CostModel cost_model;
  std::vector<EpisodeTrace> episodes;
};

Json run_header(const RunMode& mode, const CalibrationTable& table, std::size_t seeds,
                std::uint64_t seed_base);
std::string to_jsonl(const RunMode& mode, const CalibrationTable& table,
                     std::span<const EpisodeTrace> episodes, std::uint64_t seed_base);
RunLog read_run_log(const std::filesystem::path& path);

std::vector<CalibrationSample> read_samples(const std::filesystem::path& path);

/// Accepts a bare 7-array per line or an object with an "action" field;
/// objects whose "type" is not "step" (run headers, episode summaries) are skipped.
std::vector<Action> read_action_log(const std::filesystem::path& path);

}  // namespace kinedispatch::io
