#pragma once

// Kinematic sensitivity proxies.
//
// Motion fineness M_t = clamp(1 - ‖a_t.xyz‖ / μ_max, 0, 1) and angular jerk
// J_t = min(‖a_t.rot - a_{t-1}.rot‖ / ν_max, J_cap), where μ_max and ν_max are
// nearest-rank 95th percentiles over bounded histories. M is averaged over a
// broad macro window, J over a tight micro window, and the two means are
// fused into S_t = max(0, λ M̄ + (1 - λ) J̄).

#include <cstddef>
#include <span>
#include <vector>

#include "kinedispatch/types.hpp"

namespace kinedispatch {

/// Fixed-capacity FIFO; pushing into a full buffer evicts the oldest entry.
template <typename T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity = 1) : data_(capacity == 0 ? 1 : capacity) {}

  void push(const T& v) {
    data_[(head_ + size_) % data_.size()] = v;
    if (size_ < data_.size()) {
      ++size_;
    } else {
      head_ = (head_ + 1) % data_.size();
    }
  }

  void clear() noexcept {
    head_ = 0;
    size_ = 0;
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return data_.size(); }
  bool empty() const noexcept { return size_ == 0; }
  bool full() const noexcept { return size_ == data_.size(); }

  /// i = 0 is the oldest element.
  const T& operator[](std::size_t i) const { return data_[(head_ + i) % data_.size()]; }

  std::vector<T> to_vector() const {
    std::vector<T> out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) {
      out.push_back((*this)[i]);
    }
    return out;
  }

 private:
  std::vector<T> data_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

struct KinematicsConfig {
  std::size_t macro_window = 10;
  std::size_t micro_window = 5;
  std::size_t history = 256;
  double lambda = 0.5;
  double jerk_cap = 2.0;
  double percentile = 0.95;
  double normalizer_floor = 1e-6;

  /// Throws InvalidInput on W_micro >= W_macro, zero sizes, λ ∉ [0,1], etc.
  void validate() const;
};

struct SensitivityState {
  double motion = 0.0;       // M_t
  double jerk = 0.0;         // J_t
  double motion_mean = 0.0;  // M̄_t over the macro window
  double jerk_mean = 0.0;    // J̄_t over the micro window
  double fused = 0.0;        // S_t
  double mu_max = 0.0;
  double nu_max = 0.0;
  bool warmup = true;
};

double motion_fineness(const Action& a, double mu_max);

double angular_jerk(const Action& a, const Action& prev, double nu_max, double jerk_cap = 2.0);

/// max(0, λ·M̄ + (1-λ)·J̄). Throws InvalidInput if λ ∉ [0, 1].
double fuse_sensitivity(double motion_mean, double jerk_mean, double lambda);

/// Nearest-rank percentile: the ⌈q·n⌉-th smallest value. Empty input yields 0.
double nearest_rank_percentile(std::span<const double> values, double q);

/// Single-owner per-stream tracker; observe() must be called in step order.
class KinematicTracker {
 public:
  explicit KinematicTracker(KinematicsConfig config = {});

  SensitivityState observe(const Action& a);

  /// State after the latest observation; before any observation, an all-zero
  /// warmup state.
  const SensitivityState& current() const noexcept { return state_; }

  bool warmup() const noexcept { return steps_seen_ < config_.macro_window; }
  std::size_t steps_seen() const noexcept { return steps_seen_; }
  const KinematicsConfig& config() const noexcept { return config_; }

  void reset();

  // Raw buffers, oldest first; exposed for serialization and replay oracles.
  std::vector<double> magnitude_history() const { return magnitudes_.to_vector(); }
  std::vector<double> jerk_history() const { return jerks_.to_vector(); }
  std::vector<double> macro_window() const { return macro_.to_vector(); }
  std::vector<double> micro_window() const { return micro_.to_vector(); }
  const Vec3& previous_rotation() const noexcept { return prev_rot_; }

  /// Rebuilds a tracker from serialized buffers. Throws InvalidInput when a
  /// buffer exceeds its configured capacity.
  static KinematicTracker restore(KinematicsConfig config, std::span<const double> magnitudes,
                                  std::span<const double> jerks, std::span<const double> macro,
                                  std::span<const double> micro, const Vec3& prev_rot,
                                  std::size_t steps_seen, const SensitivityState& state);

 private:
  double window_mean(const RingBuffer<double>& w) const;

  KinematicsConfig config_;
  RingBuffer<double> magnitudes_;
  RingBuffer<double> jerks_;
  RingBuffer<double> macro_;
  RingBuffer<double> micro_;
  mutable std::vector<double> scratch_;
  Vec3 prev_rot_{0.0, 0.0, 0.0};
  std::size_t steps_seen_ = 0;
  SensitivityState state_;
};

}  // namespace kinedispatch
