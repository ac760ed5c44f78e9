#include "kinedispatch/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kinedispatch {

void KinematicsConfig::validate() const {
  if (macro_window == 0 || micro_window == 0 || history == 0) {
    throw InvalidInput("kinematics windows and history must be non-empty");
  }
  if (micro_window >= macro_window) {
    throw InvalidInput("micro window must be strictly shorter than the macro window");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidInput("lambda must lie in [0, 1]");
  }
  if (!(jerk_cap > 0.0)) {
    throw InvalidInput("jerk cap must be positive");
  }
  if (!(percentile > 0.0 && percentile <= 1.0)) {
    throw InvalidInput("percentile must lie in (0, 1]");
  }
  if (!(normalizer_floor > 0.0)) {
    throw InvalidInput("normalizer floor must be positive");
  }
}

double motion_fineness(const Action& a, double mu_max) {
  if (!(mu_max > 0.0)) {
    throw InvalidInput("motion_fineness: mu_max must be positive");
  }
  return std::clamp(1.0 - norm(a.xyz) / mu_max, 0.0, 1.0);
}

double angular_jerk(const Action& a, const Action& prev, double nu_max, double jerk_cap) {
  if (!(nu_max > 0.0)) {
    throw InvalidInput("angular_jerk: nu_max must be positive");
  }
  return std::min(norm(a.rot - prev.rot) / nu_max, jerk_cap);
}

double fuse_sensitivity(double motion_mean, double jerk_mean, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidInput("fuse_sensitivity: lambda must lie in [0, 1]");
  }
  return std::max(0.0, lambda * motion_mean + (1.0 - lambda) * jerk_mean);
}

namespace {

// Reorders `v`.
double percentile_inplace(std::vector<double>& v, double q) {
  if (v.empty()) {
    return 0.0;
  }
  const auto n = v.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

}  // namespace

double nearest_rank_percentile(std::span<const double> values, double q) {
  std::vector<double> v(values.begin(), values.end());
  return percentile_inplace(v, q);
}

KinematicTracker::KinematicTracker(KinematicsConfig config)
    : config_(config),
      magnitudes_(config.history),
      jerks_(config.history),
      macro_(config.macro_window),
      micro_(config.micro_window) {
  config_.validate();
  scratch_.reserve(config_.history);
}

void KinematicTracker::reset() {
  magnitudes_.clear();
  jerks_.clear();
  macro_.clear();
  micro_.clear();
  prev_rot_ = {0.0, 0.0, 0.0};
  steps_seen_ = 0;
  state_ = SensitivityState{};
}

double KinematicTracker::window_mean(const RingBuffer<double>& w) const {
  if (w.empty()) {
    return 0.0;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
  }
  return acc / static_cast<double>(w.size());
}

SensitivityState KinematicTracker::observe(const Action& a) {
  const Vec3 prev = steps_seen_ == 0 ? a.rot : prev_rot_;
  const double magnitude = norm(a.xyz);
  const double rot_delta = norm(a.rot - prev);
  magnitudes_.push(magnitude);
  jerks_.push(rot_delta);

  const auto percentile_of = [this](const RingBuffer<double>& buf) {
    scratch_.clear();
    for (std::size_t i = 0; i < buf.size(); ++i) {
      scratch_.push_back(buf[i]);
    }
    return std::max(percentile_inplace(scratch_, config_.percentile),
                    config_.normalizer_floor);
  };
  state_.mu_max = percentile_of(magnitudes_);
  state_.nu_max = percentile_of(jerks_);

  state_.motion = std::clamp(1.0 - magnitude / state_.mu_max, 0.0, 1.0);
  state_.jerk = std::min(rot_delta / state_.nu_max, config_.jerk_cap);
  macro_.push(state_.motion);
  micro_.push(state_.jerk);
  state_.motion_mean = window_mean(macro_);
  state_.jerk_mean = window_mean(micro_);
  state_.fused = fuse_sensitivity(state_.motion_mean, state_.jerk_mean, config_.lambda);

  prev_rot_ = a.rot;
  ++steps_seen_;
  state_.warmup = warmup();
  return state_;
}

KinematicTracker KinematicTracker::restore(KinematicsConfig config,
                                           std::span<const double> magnitudes,
                                           std::span<const double> jerks,
                                           std::span<const double> macro,
                                           std::span<const double> micro, const Vec3& prev_rot,
                                           std::size_t steps_seen, const SensitivityState& state) {
  KinematicTracker t(config);
  if (magnitudes.size() > config.history || jerks.size() > config.history ||
      macro.size() > config.macro_window || micro.size() > config.micro_window) {
    throw InvalidInput("tracker state exceeds configured buffer capacities");
  }
  for (double v : magnitudes) t.magnitudes_.push(v);
  for (double v : jerks) t.jerks_.push(v);
  for (double v : macro) t.macro_.push(v);
  for (double v : micro) t.micro_.push(v);
  t.prev_rot_ = prev_rot;
  t.steps_seen_ = steps_seen;
  t.state_ = state;
  return t;
}

}  // namespace kinedispatch
