#pragma once

// Offline threshold calibration.
//
// Samples (S, e^(2), e^(4), e^(8)) from full-precision trajectories are binned
// uniformly over [0, θ_fp]. Per bin and per bit-width the conditional error
// statistic is smoothed to be non-decreasing in S (pool-adjacent-violators)
// and compared with the bound ε_a(S) = D_acc / (S + η) at the bin's upper
// edge. θ_{2|4} (θ_{4|8}) is the lower edge of the first bin where the 2-bit
// (4-bit) statistic exceeds the bound, or θ_fp if it never does.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "kinedispatch/dispatcher.hpp"

namespace kinedispatch {

struct CalibrationSample {
  double sensitivity = 0.0;
  std::array<double, 3> error{0.0, 0.0, 0.0};  // e^(2), e^(4), e^(8)

  double error_at(BitWidth b) const;  // 0 for 16
};

double error_bound(double sensitivity, double d_acc, double eta);

enum class BinStatistic { kMean, kP90 };

struct CalibrationOptions {
  std::size_t bins = 32;
  std::size_t min_per_bin = 50;
  BinStatistic statistic = BinStatistic::kMean;
};

/// Weighted pool-adjacent-violators fit, non-decreasing. Weights must be positive.
std::vector<double> isotonic_non_decreasing(std::span<const double> y, std::span<const double> w);

struct BinnedErrors {
  double width = 0.0;
  std::vector<std::size_t> counts;
  std::vector<bool> occupied;  // count >= min_per_bin
  /// Smoothed statistic per bin for 2, 4 and 8 bits; unoccupied bins interpolated.
  std::array<std::vector<double>, 3> smoothed;

  double upper_edge(std::size_t bin) const { return width * static_cast<double>(bin + 1); }
  double lower_edge(std::size_t bin) const { return width * static_cast<double>(bin); }
};

/// Bins samples with S ∈ [0, θ_fp]; the last bin is closed at θ_fp.
BinnedErrors bin_errors(std::span<const CalibrationSample> samples, double theta_fp,
                        const CalibrationOptions& options);

struct CalibrationResult {
  CalibrationTable table;
  BinnedErrors bins;
  std::vector<std::size_t> sparse_bins;
  std::vector<std::string> warnings;
};

/// Throws InvalidInput on an empty sample set or when no sample falls in [0, θ_fp].
CalibrationResult derive_thresholds(std::span<const CalibrationSample> samples,
                                    const CalibrationTable& table_in,
                                    const CalibrationOptions& options = {});

struct BinAudit {
  std::size_t count = 0;
  double worst_ratio = 0.0;  // max e / ε_a(S) over samples in the bin
  BitWidth bits = BitWidth::k2;  // Φ at the bin's upper edge
  bool smoothed_within_bound = true;
};

struct ValidationReport {
  std::size_t total = 0;
  std::size_t fallback = 0;   // S > θ_fp, run at 16 bits
  std::size_t satisfied = 0;  // e^(Φ(S)) <= ε_a(S), fallback counted as satisfied
  double satisfaction = 1.0;
  std::vector<BinAudit> bins;
  std::array<std::size_t, 3> audited_at{0, 0, 0};  // sub-fallback samples per 2/4/8 bits

  bool all_bins_within_bound() const;
};

ValidationReport validate_table(const CalibrationTable& table,
                                std::span<const CalibrationSample> samples,
                                const CalibrationOptions& options = {});

}  // namespace kinedispatch
