#pragma once

// Step-wise perturbation analysis: inject one quantized action at step t of
// a successful full-precision episode, let the full-precision policy finish,
// and relate the terminal deviation D_T to the local action error e_t through
// s_t = D_T / e_t.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kinedispatch/envpolicy.hpp"
#include "kinedispatch/kinematics.hpp"
#include "kinedispatch/quantcore.hpp"

namespace kinedispatch {

/// Records with e_t at or below this are excluded from s_t.
inline constexpr double kMinActionError = 1e-9;
inline constexpr double kLogFloor = 1e-9;
inline constexpr std::size_t kMinCorrelationRecords = 30;

struct BaselineTrace {
  std::uint64_t seed = 0;
  std::vector<EnvState> states;   // states[t] is the state before action t
  std::vector<Action> actions;
  std::vector<SensitivityState> kinematics;  // after observing actions[t]
  EpisodeStatus status;
};

struct BaselineOutcome {
  std::optional<BaselineTrace> trace;
  std::string reason;  // why the seed was excluded
};

BaselineOutcome rollout_baseline(std::uint64_t seed, const EnvConfig& env = {},
                                 const KinematicsConfig& kin = {});

struct Perturbation {
  double action_error = 0.0;
  double terminal_deviation = 0.0;
  bool success = false;
};

/// Throws InvalidInput for t outside the trace or bits == 16.
Perturbation perturb_at(const BaselineTrace& baseline, int t, BitWidth bits,
                        const EnvConfig& env = {});

/// Re-runs the seed from reset, failing if its baseline does not succeed.
Perturbation perturb_at(std::uint64_t seed, int t, BitWidth bits, const EnvConfig& env = {});

/// States visited by the perturbed episode from reset, for prefix checks.
std::vector<EnvState> perturbed_states(std::uint64_t seed, int t, BitWidth bits,
                                       const EnvConfig& env = {});

struct ProfileRecord {
  std::uint64_t seed = 0;
  int t = 0;
  Phase phase = Phase::kTransit;
  double action_error = 0.0;
  double terminal_deviation = 0.0;
  bool success = false;
  double sensitivity = 0.0;  // s_t; 0 when excluded
  double motion_mean = 0.0;
  double jerk_mean = 0.0;
  bool excluded = false;
};

struct ProfileRun {
  std::vector<ProfileRecord> records;  // ordered by (seed, t)
  std::vector<std::uint64_t> skipped_seeds;
  std::vector<std::string> diagnostics;
};

ProfileRun profile(std::span<const std::uint64_t> seeds, BitWidth bits, const EnvConfig& env = {},
                   const KinematicsConfig& kin = {});

/// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct ProxyCorrelation {
  double r_motion = 0.0;
  double r_jerk = 0.0;
  std::size_t records = 0;
};

/// Pooled r of M̄ and J̄ against log(s_t + 1e-9) over included records.
/// Throws InvalidInput with fewer than 30 included records.
ProxyCorrelation proxy_correlation(std::span<const ProfileRecord> records);

/// Same statistic per seed; seeds with too few records are skipped.
std::vector<std::pair<std::uint64_t, ProxyCorrelation>> per_trajectory_correlation(
    std::span<const ProfileRecord> records, std::size_t min_records = 10);

}  // namespace kinedispatch
