#pragma once

// Closed-loop orchestration: static/dynamic precision rollouts, suite
// reports, calibration-data collection and offline replay of action logs.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kinedispatch/calibration.hpp"
#include "kinedispatch/dispatcher.hpp"
#include "kinedispatch/envpolicy.hpp"
#include "kinedispatch/quantcore.hpp"

namespace kinedispatch {

struct RunMode {
  bool dynamic = false;
  BitWidth bits = BitWidth::k16;  // static modes only

  static RunMode static_bits(BitWidth b) { return RunMode{false, b}; }
  static RunMode dynamic_dispatch() { return RunMode{true, BitWidth::k16}; }

  /// "static:16", "static:8", "static:4", "static:2" or "dynamic".
  std::string name() const;
  static RunMode parse(std::string_view text);

  bool operator==(const RunMode&) const = default;
};

struct HarnessConfig {
  EnvConfig env;
  CalibrationTable table;  // cost model + kinematics windows; Θ needed for dynamic runs
};

struct TrajectoryRecord {
  int t = 0;
  Phase phase = Phase::kTransit;
  Action action;
  BitWidth bits = BitWidth::k16;
  BitWidth target = BitWidth::k16;
  bool warmup = true;
  double sensitivity = 0.0;  // decision-time S (actions < t)
  double motion_mean = 0.0;
  double jerk_mean = 0.0;
  double cost = 0.0;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  EpisodeResult result;
  std::vector<TrajectoryRecord> records;
};

/// Throws InvalidInput for a dynamic run with an uncalibrated table.
EpisodeTrace simulate_episode(std::uint64_t seed, const RunMode& mode, const HarnessConfig& cfg);

struct ModeSummary {
  std::string mode;
  double theta_fp = 0.0;
  std::size_t episodes = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;  // percent
  double mean_cost = 0.0;
  double mean_steps = 0.0;
  double mean_deviation = 0.0;
  std::optional<double> speedup;  // mean cost of static:16 over this mode's mean cost
  std::array<double, 4> bits_fraction{0.0, 0.0, 0.0, 0.0};  // share of steps at 2/4/8/16
};

struct SuiteReport {
  CostModel cost_model;
  std::vector<ModeSummary> modes;

  const ModeSummary* find(std::string_view mode) const;
  /// Aligned-column text table.
  std::string to_text() const;
};

ModeSummary summarize(std::string mode, double theta_fp, std::span<const EpisodeTrace> episodes);

/// Fills speedup for every mode when a static:16 summary is present.
void attach_speedups(SuiteReport& report);

SuiteReport run_suite(std::span<const std::uint64_t> seeds, std::span<const RunMode> modes,
                      const HarnessConfig& cfg);

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count);

struct CalibrationCollection {
  std::vector<CalibrationSample> samples;
  std::vector<std::uint64_t> used_seeds;
  std::vector<std::uint64_t> excluded_seeds;  // failed full-precision baselines
};

/// Full-precision rollouts; at every step the policy is also evaluated
/// counterfactually at 2/4/8 bits. S is the tracker state after observing a_t.
CalibrationCollection collect_calibration(std::span<const std::uint64_t> seeds,
                                          const HarnessConfig& cfg);

struct ScheduleEntry {
  int t = 0;
  double sensitivity = 0.0;
  bool warmup = true;
  BitWidth target = BitWidth::k16;
  BitWidth active = BitWidth::k16;
};

/// Kinematics + dispatcher over a recorded action sequence; no environment.
std::vector<ScheduleEntry> replay_dispatch(std::span<const Action> actions,
                                           const CalibrationTable& table);

}  // namespace kinedispatch
