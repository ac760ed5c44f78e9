#pragma once

// Sensitivity → bit-width dispatch.
//
// target_bits() applies the full-precision bypass (S > θ_fp → 16) and the
// piecewise lookup Φ:
//
//   Φ(S) = 2  for S ∈ [0, θ_{2|4}]
//          4  for S ∈ (θ_{2|4}, θ_{4|8}]
//          8  for S ∈ (θ_{4|8}, θ_fp]
//
// The active width is then stabilised by hysteresis: upgrades take effect
// immediately, downgrades only after K stable steps. step_stateful() is the
// saturating-counter machine used at runtime; step_reference() evaluates the
// sliding-window rule over the last K targets and is kept as a test oracle.

#include <array>
#include <deque>
#include <optional>
#include <span>

#include "kinedispatch/kinematics.hpp"
#include "kinedispatch/types.hpp"

namespace kinedispatch {

/// Relative per-step latency per bit-width; indexed by bit_index().
struct CostModel {
  std::array<double, 4> cost{0.45, 0.55, 0.70, 1.00};

  double operator()(BitWidth b) const noexcept { return cost[bit_index(b)]; }
  double& at(BitWidth b) noexcept { return cost[bit_index(b)]; }

  /// Requires cost(16) >= cost(8) >= cost(4) >= cost(2) > 0.
  void validate() const;
};

struct CalibrationTable {
  std::optional<double> theta_24;  // unset until calibrated
  std::optional<double> theta_48;
  double theta_fp = 0.5;
  double lambda = 0.5;
  int K = 3;
  double d_acc = 1.0;
  double eta = 0.01;
  std::size_t w_macro = 10;
  std::size_t w_micro = 5;
  std::size_t history = 256;
  CostModel cost_model;

  bool calibrated() const noexcept { return theta_24.has_value() && theta_48.has_value(); }

  /// Checks 0 ≤ θ_{2|4} ≤ θ_{4|8} ≤ θ_fp (when calibrated), K ≥ 1, η > 0,
  /// D_acc > 0, λ ∈ [0,1], window sizes and the cost model. Throws InvalidInput.
  void validate() const;

  KinematicsConfig kinematics_config() const;

  /// Copy with θ_fp replaced and Θ clamped to the new θ_fp.
  CalibrationTable with_theta_fp(double theta_fp_new) const;
};

BitWidth phi_lookup(double sensitivity, const CalibrationTable& table);

BitWidth target_bits(double sensitivity, const CalibrationTable& table, bool warmup);

/// Dispatcher state: counter c ∈ [0, K), active precision b*, max candidate b̄.
struct DispatcherState {
  int counter = 0;
  BitWidth active = BitWidth::k16;
  BitWidth max_candidate = BitWidth::k16;

  bool operator==(const DispatcherState&) const = default;
};

BitWidth step_stateful(DispatcherState& state, BitWidth target, int K);

/// `targets` holds the most recent targets, oldest first, ending with the
/// current one. Fewer than K entries holds prev_active.
BitWidth step_reference(std::span<const BitWidth> targets, BitWidth prev_active, int K);

/// Owns the target history required by step_reference.
class ReferenceDispatcher {
 public:
  explicit ReferenceDispatcher(int K, BitWidth initial = BitWidth::k16);
  BitWidth step(BitWidth target);
  BitWidth active() const noexcept { return active_; }

 private:
  int K_;
  std::deque<BitWidth> history_;
  BitWidth active_;
};

struct DispatchDecision {
  double sensitivity = 0.0;
  double motion_mean = 0.0;
  double jerk_mean = 0.0;
  bool warmup = true;
  BitWidth target = BitWidth::k16;
  BitWidth active = BitWidth::k16;
};

/// Runtime pipeline for one control stream: kinematic tracker + stateful
/// dispatcher. decide() for step t only sees actions observed before t.
class PrecisionScheduler {
 public:
  explicit PrecisionScheduler(CalibrationTable table);

  DispatchDecision decide();
  void observe(const Action& executed);

  const KinematicTracker& tracker() const noexcept { return tracker_; }
  const DispatcherState& state() const noexcept { return state_; }
  const CalibrationTable& table() const noexcept { return table_; }

  void restore(KinematicTracker tracker, DispatcherState state);

 private:
  CalibrationTable table_;
  KinematicTracker tracker_;
  DispatcherState state_;
};

}  // namespace kinedispatch
