#include "kinedispatch/dispatcher.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kinedispatch {

void CostModel::validate() const {
  if (!(cost[0] > 0.0)) {
    throw InvalidInput("cost model: cost(2) must be positive");
  }
  for (std::size_t i = 1; i < cost.size(); ++i) {
    if (!std::isfinite(cost[i]) || cost[i] < cost[i - 1]) {
      throw InvalidInput("cost model must be non-decreasing in bit-width");
    }
  }
}

void CalibrationTable::validate() const {
  if (!(theta_fp >= 0.0) || !std::isfinite(theta_fp)) {
    throw InvalidInput("theta_fp must be a finite non-negative number");
  }
  if (theta_24.has_value() != theta_48.has_value()) {
    throw InvalidInput("theta_24 and theta_48 must be set together");
  }
  if (calibrated()) {
    if (!(*theta_24 >= 0.0 && *theta_24 <= *theta_48 && *theta_48 <= theta_fp)) {
      throw InvalidInput("thresholds must satisfy 0 <= theta_24 <= theta_48 <= theta_fp");
    }
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidInput("lambda must lie in [0, 1]");
  }
  if (K < 1) {
    throw InvalidInput("delay window K must be >= 1");
  }
  if (!(eta > 0.0) || !(d_acc > 0.0)) {
    throw InvalidInput("D_acc and eta must be positive");
  }
  kinematics_config().validate();
  cost_model.validate();
}

KinematicsConfig CalibrationTable::kinematics_config() const {
  KinematicsConfig c;
  c.macro_window = w_macro;
  c.micro_window = w_micro;
  c.history = history;
  c.lambda = lambda;
  return c;
}

CalibrationTable CalibrationTable::with_theta_fp(double theta_fp_new) const {
  CalibrationTable t = *this;
  t.theta_fp = theta_fp_new;
  if (t.theta_24) t.theta_24 = std::min(*t.theta_24, theta_fp_new);
  if (t.theta_48) t.theta_48 = std::min(*t.theta_48, theta_fp_new);
  return t;
}

BitWidth phi_lookup(double sensitivity, const CalibrationTable& table) {
  if (!table.calibrated()) {
    throw ContractViolation("phi_lookup: table is not calibrated");
  }
  if (sensitivity > table.theta_fp) {
    throw ContractViolation("phi_lookup: S above theta_fp must be routed to the fallback");
  }
  if (sensitivity <= *table.theta_24) return BitWidth::k2;
  if (sensitivity <= *table.theta_48) return BitWidth::k4;
  return BitWidth::k8;
}

BitWidth target_bits(double sensitivity, const CalibrationTable& table, bool warmup) {
  if (warmup || sensitivity > table.theta_fp) {
    return BitWidth::k16;
  }
  return phi_lookup(sensitivity, table);
}

BitWidth step_stateful(DispatcherState& s, BitWidth target, int K) {
  if (target >= s.active) {
    s = DispatcherState{0, target, target};
    return s.active;
  }
  // b̄_{t-1}·𝕀(c_{t-1} > 0): a zero counter forgets the previous candidate.
  const BitWidth candidate = s.counter > 0 ? max_bits(target, s.max_candidate) : target;
  const int counter = (candidate == s.max_candidate ? s.counter : 0) + 1;
  s.max_candidate = candidate;
  if (counter >= K) {
    s.active = candidate;
    s.counter = 0;
  } else {
    s.counter = counter;
  }
  return s.active;
}

BitWidth step_reference(std::span<const BitWidth> targets, BitWidth prev_active, int K) {
  if (targets.empty()) {
    return prev_active;
  }
  const BitWidth current = targets.back();
  if (current >= prev_active) {
    return current;
  }
  if (targets.size() < static_cast<std::size_t>(K)) {
    return prev_active;
  }
  const auto window = targets.last(static_cast<std::size_t>(K));
  const BitWidth peak = *std::max_element(window.begin(), window.end());
  return peak <= current ? current : prev_active;
}

ReferenceDispatcher::ReferenceDispatcher(int K, BitWidth initial) : K_(K), active_(initial) {
  if (K < 1) {
    throw InvalidInput("delay window K must be >= 1");
  }
}

BitWidth ReferenceDispatcher::step(BitWidth target) {
  history_.push_back(target);
  if (history_.size() > static_cast<std::size_t>(K_)) {
    history_.pop_front();
  }
  const std::vector<BitWidth> window(history_.begin(), history_.end());
  active_ = step_reference(window, active_, K_);
  return active_;
}

PrecisionScheduler::PrecisionScheduler(CalibrationTable table)
    : table_(std::move(table)), tracker_(table_.kinematics_config()) {
  table_.validate();
  if (!table_.calibrated()) {
    throw InvalidInput("dynamic dispatch requires a calibrated table");
  }
}

DispatchDecision PrecisionScheduler::decide() {
  const SensitivityState& s = tracker_.current();
  DispatchDecision d;
  d.warmup = tracker_.warmup();
  d.sensitivity = s.fused;
  d.motion_mean = s.motion_mean;
  d.jerk_mean = s.jerk_mean;
  d.target = target_bits(s.fused, table_, d.warmup);
  d.active = step_stateful(state_, d.target, table_.K);
  return d;
}

void PrecisionScheduler::observe(const Action& executed) { tracker_.observe(executed); }

void PrecisionScheduler::restore(KinematicTracker tracker, DispatcherState state) {
  tracker_ = std::move(tracker);
  state_ = state;
}

}  // namespace kinedispatch
