#include "kinedispatch/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kinedispatch {
namespace {

double statistic(std::vector<double>& values, BinStatistic stat) {
  if (values.empty()) {
    return 0.0;
  }
  if (stat == BinStatistic::kP90) {
    return nearest_rank_percentile(values, 0.90);
  }
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

std::size_t bin_of(double s, double width, std::size_t bins) {
  const auto k = static_cast<std::size_t>(std::floor(s / width));
  return std::min(k, bins - 1);
}

// Fills unoccupied entries by linear interpolation between the nearest
// occupied neighbours; constant beyond the first/last occupied bin.
void interpolate_gaps(std::vector<double>& v, const std::vector<bool>& occupied) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (occupied[i]) idx.push_back(i);
  }
  if (idx.empty()) return;
  for (std::size_t i = 0; i < n; ++i) {
    if (occupied[i]) continue;
    const auto hi = std::lower_bound(idx.begin(), idx.end(), i);
    if (hi == idx.begin()) {
      v[i] = v[*hi];
    } else if (hi == idx.end()) {
      v[i] = v[idx.back()];
    } else {
      const std::size_t a = *(hi - 1);
      const std::size_t b = *hi;
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      v[i] = v[a] + t * (v[b] - v[a]);
    }
  }
}

double first_violation(const BinnedErrors& binned, std::size_t bit, const CalibrationTable& t) {
  const auto& means = binned.smoothed[bit];
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k] > error_bound(binned.upper_edge(k), t.d_acc, t.eta)) {
      return binned.lower_edge(k);
    }
  }
  return t.theta_fp;
}

}  // namespace

double CalibrationSample::error_at(BitWidth b) const {
  return is_full_precision(b) ? 0.0 : error[bit_index(b)];
}

double error_bound(double sensitivity, double d_acc, double eta) {
  if (!(d_acc > 0.0) || !(eta > 0.0)) {
    throw InvalidInput("error_bound: D_acc and eta must be positive");
  }
  return d_acc / (sensitivity + eta);
}

std::vector<double> isotonic_non_decreasing(std::span<const double> y, std::span<const double> w) {
  if (y.size() != w.size()) {
    throw InvalidInput("isotonic_non_decreasing: value/weight size mismatch");
  }
  struct Block {
    double value;
    double weight;
    std::size_t length;
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(w[i] > 0.0)) {
      throw InvalidInput("isotonic_non_decreasing: weights must be positive");
    }
    blocks.push_back({y[i], w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double weight = prev.weight + top.weight;
      prev.value = (prev.value * prev.weight + top.value * top.weight) / weight;
      prev.weight = weight;
      prev.length += top.length;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block& b : blocks) {
    out.insert(out.end(), b.length, b.value);
  }
  return out;
}

BinnedErrors bin_errors(std::span<const CalibrationSample> samples, double theta_fp,
                        const CalibrationOptions& options) {
  if (options.bins == 0) {
    throw InvalidInput("calibration needs at least one bin");
  }
  if (!(theta_fp > 0.0) || !std::isfinite(theta_fp)) {
    throw InvalidInput("calibration needs a finite positive theta_fp");
  }
  const std::size_t n = options.bins;
  BinnedErrors out;
  out.width = theta_fp / static_cast<double>(n);
  out.counts.assign(n, 0);

  std::array<std::vector<std::vector<double>>, 3> per_bin;
  for (auto& v : per_bin) v.assign(n, {});
  for (const CalibrationSample& s : samples) {
    if (!(s.sensitivity >= 0.0) || s.sensitivity > theta_fp) continue;
    const std::size_t k = bin_of(s.sensitivity, out.width, n);
    ++out.counts[k];
    for (std::size_t b = 0; b < 3; ++b) per_bin[b][k].push_back(s.error[b]);
  }

  out.occupied.assign(n, false);
  for (std::size_t k = 0; k < n; ++k) out.occupied[k] = out.counts[k] >= options.min_per_bin;
  if (std::none_of(out.occupied.begin(), out.occupied.end(), [](bool b) { return b; })) {
    for (std::size_t k = 0; k < n; ++k) out.occupied[k] = out.counts[k] > 0;
  }

  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<double> y;
    std::vector<double> w;
    for (std::size_t k = 0; k < n; ++k) {
      if (!out.occupied[k]) continue;
      y.push_back(statistic(per_bin[b][k], options.statistic));
      w.push_back(static_cast<double>(out.counts[k]));
    }
    const std::vector<double> fit = isotonic_non_decreasing(y, w);
    out.smoothed[b].assign(n, 0.0);
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (out.occupied[k]) out.smoothed[b][k] = fit[j++];
    }
    interpolate_gaps(out.smoothed[b], out.occupied);
  }
  return out;
}

CalibrationResult derive_thresholds(std::span<const CalibrationSample> samples,
                                    const CalibrationTable& table_in,
                                    const CalibrationOptions& options) {
  if (samples.empty()) {
    throw InvalidInput("derive_thresholds: no calibration samples");
  }
  CalibrationResult result;
  result.bins = bin_errors(samples, table_in.theta_fp, options);
  const BinnedErrors& binned = result.bins;

  const auto in_range = static_cast<std::size_t>(
      std::count_if(binned.counts.begin(), binned.counts.end(), [](std::size_t c) { return c; }));
  if (in_range == 0) {
    throw InvalidInput("derive_thresholds: no sample has S within [0, theta_fp]");
  }
  for (std::size_t k = 0; k < binned.counts.size(); ++k) {
    if (binned.counts[k] < options.min_per_bin) result.sparse_bins.push_back(k);
  }
  if (!result.sparse_bins.empty()) {
    std::string msg = "coverage: " + std::to_string(result.sparse_bins.size()) +
                      " bin(s) below " + std::to_string(options.min_per_bin) +
                      " samples, interpolated from neighbours:";
    for (std::size_t k : result.sparse_bins) msg += " " + std::to_string(k);
    result.warnings.push_back(std::move(msg));
  }

  CalibrationTable t = table_in;
  const double theta_24 = first_violation(binned, 0, t);
  const double theta_48 = std::max(first_violation(binned, 1, t), theta_24);
  t.theta_24 = theta_24;
  t.theta_48 = theta_48;
  t.validate();
  result.table = t;
  return result;
}

bool ValidationReport::all_bins_within_bound() const {
  return std::all_of(bins.begin(), bins.end(), [](const BinAudit& b) {
    return b.count == 0 || b.smoothed_within_bound;
  });
}

ValidationReport validate_table(const CalibrationTable& table,
                                std::span<const CalibrationSample> samples,
                                const CalibrationOptions& options) {
  if (!table.calibrated()) {
    throw InvalidInput("validate_table: table is not calibrated");
  }
  ValidationReport r;
  r.total = samples.size();
  if (samples.empty()) {
    return r;
  }
  const std::size_t n = options.bins;
  const double width = table.theta_fp / static_cast<double>(n);
  if (width > 0.0) {
    r.bins.assign(n, BinAudit{});
    for (std::size_t k = 0; k < n; ++k) {
      const double upper = std::min(width * static_cast<double>(k + 1), table.theta_fp);
      r.bins[k].bits = phi_lookup(upper, table);
    }
  }

  for (const CalibrationSample& s : samples) {
    if (s.sensitivity > table.theta_fp) {
      ++r.fallback;
      ++r.satisfied;
      continue;
    }
    const BitWidth b = phi_lookup(s.sensitivity, table);
    ++r.audited_at[bit_index(b)];
    const double bound = error_bound(s.sensitivity, table.d_acc, table.eta);
    const double e = s.error_at(b);
    if (e <= bound) ++r.satisfied;
    if (width > 0.0) {
      BinAudit& audit = r.bins[bin_of(s.sensitivity, width, n)];
      ++audit.count;
      audit.worst_ratio = std::max(audit.worst_ratio, e / bound);
    }
  }
  r.satisfaction = static_cast<double>(r.satisfied) / static_cast<double>(r.total);

  if (width > 0.0 && r.fallback < r.total) {
    const BinnedErrors binned = bin_errors(samples, table.theta_fp, options);
    for (std::size_t k = 0; k < n; ++k) {
      BinAudit& audit = r.bins[k];
      if (audit.count == 0 || is_full_precision(audit.bits)) continue;
      const double bound = error_bound(binned.upper_edge(k), table.d_acc, table.eta);
      audit.smoothed_within_bound = binned.smoothed[bit_index(audit.bits)][k] <= bound;
    }
  }
  return r;
}

}  // namespace kinedispatch
