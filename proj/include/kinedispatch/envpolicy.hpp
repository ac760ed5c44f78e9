#pragma once

// Deterministic pick-and-place toy environment and a scripted controller
// whose internal feature vector is fake-quantized before the action readout.
//
// Phases: Transit (fast move to a hover point near the object), Align
// (closed-loop centering on a pre-grasp point, then a blind commit stroke
// along a fixed approach axis, with wrist dither), Grasp (gripper closes and
// the in-hand offset freezes), Place (carry to the goal, centre, commit,
// release), Done. Errors made during a commit stroke survive to the terminal
// deviation; errors made in Transit, the carry or while centring are
// corrected by the closed loop.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kinedispatch/types.hpp"

namespace kinedispatch {

enum class Phase : std::uint8_t { kTransit = 0, kAlign = 1, kGrasp = 2, kPlace = 3, kDone = 4 };

/// Sub-stage inside Align and Place.
enum class Stage : std::uint8_t { kApproach = 0, kCenter = 1, kCommit = 2 };

std::string_view phase_name(Phase p) noexcept;
Phase phase_from_name(std::string_view name);

struct EnvConfig {
  double workspace_lo = -1.0;
  double workspace_hi = 1.0;
  double max_step_translation = 0.05;
  double grasp_radius = 0.03;
  double success_tolerance = 0.02;
  int max_steps = 300;

  double table_height = -0.5;
  double start_height = 0.1;
  double min_separation = 1.4;
  double hover_height = 0.04;       // hover point sits this far above the pre-grasp point
  double handoff_radius = 0.06;     // Transit/carry → centring
  double transit_speed = 0.05;
  double transit_slow_radius = 0.05;
  double fine_speed = 0.02;
  double fine_slow_radius = 0.04;
  double center_tolerance = 0.001;  // centring → commit
  int center_budget = 12;
  Vec3 commit_stroke{0.06, 0.0, -0.08};  // Align: pre-grasp point = object - stroke
  Vec3 place_stroke{-0.06, 0.0, -0.08};  // Place: release point approached from the other side
  double commit_speed = 0.015;
  int commit_budget = 14;
  int grasp_steps = 2;
  int grasp_budget = 5;
  double z_tolerance = 1e-3;
  double dither_amplitude = 0.1;
  double rot_scale = 0.1;
  double yaw_gain = 0.3;

  void validate() const;
};

struct EnvState {
  Vec3 ee_pos{0.0, 0.0, 0.0};
  Vec3 ee_rot{0.0, 0.0, 0.0};
  double gripper = 0.0;
  Vec3 object_pos{0.0, 0.0, 0.0};
  Vec3 goal_pos{0.0, 0.0, 0.0};
  double object_yaw = 0.0;
  Phase phase = Phase::kTransit;
  Stage stage = Stage::kApproach;
  bool grasped = false;
  int step_index = 0;
  int phase_start = 0;
  int stage_start = 0;
  std::uint64_t rng_seed = 0;

  int phase_steps() const noexcept { return step_index - phase_start; }
  int stage_steps() const noexcept { return step_index - stage_start; }
  bool operator==(const EnvState&) const = default;
};

struct EpisodeStatus {
  bool done = false;
  bool success = false;
  double terminal_deviation = 0.0;
};

struct EpisodeResult {
  bool success = false;
  double terminal_deviation = 0.0;
  int steps = 0;
  double total_cost = 0.0;
};

EnvState reset(std::uint64_t seed, const EnvConfig& cfg = {});

EnvState env_step(const EnvState& s, const Action& a, const EnvConfig& cfg = {});

EpisodeStatus episode_status(const EnvState& s, const EnvConfig& cfg = {});

/// Number of controller features passed through the quantizer.
inline constexpr std::size_t kFeatureDim = 20;

/// Controller activations, all in [0, 1]: signed direction as ±pairs, speed,
/// commit flag, signed rotation command as ±pairs, gripper, phase one-hot.
std::array<double, kFeatureDim> policy_features(const EnvState& s, const EnvConfig& cfg = {});

/// Maps (possibly quantized) features to an action using the phase weights.
Action policy_readout(const std::array<double, kFeatureDim>& features, const EnvState& s,
                      const EnvConfig& cfg = {});

/// Throws ContractViolation when s.phase is Done.
Action policy_forward(const EnvState& s, BitWidth bits, const EnvConfig& cfg = {});

}  // namespace kinedispatch
