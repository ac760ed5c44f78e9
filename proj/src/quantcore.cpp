#include "kinedispatch/quantcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kinedispatch {
namespace {

// Round half up: 127.5 → 128, -1.5 → -1.
std::int64_t round_half_up(double v) { return static_cast<std::int64_t>(std::floor(v + 0.5)); }

// Scale truncated to 40 significant bits: s * k is then exact for every
// level k < 2^13, so an on-grid vector reproduces its own scale on refit.
// Truncation keeps s <= range / levels, so the maximum still reaches qmax.
double snap_scale(double s) {
  int e = 0;
  const double m = std::frexp(s, &e);
  return std::ldexp(std::floor(std::ldexp(m, 40)), e - 40);
}

std::int64_t quantize_one(double x, const QuantParams& p, Rounding rounding) {
  const double t = x / p.scale;
  double level = rounding == Rounding::kFloor ? std::floor(t) : std::floor(t + 0.5);
  if (rounding == Rounding::kFloor && std::isfinite(level)) {
    // x / s can land one ulp off an integer; settle on the level whose
    // reconstruction s * k is the largest not exceeding x, so grid points map to themselves.
    if (p.scale * (level + 1.0) <= x) {
      level += 1.0;
    } else if (p.scale * level > x) {
      level -= 1.0;
    }
  }
  // Clamp in floating point first so huge ratios cannot overflow the cast.
  const double qmax = static_cast<double>(p.qmax());
  const double q = std::clamp(level + static_cast<double>(p.zero_point), 0.0, qmax);
  return static_cast<std::int64_t>(q);
}

}  // namespace

void validate(const QuantParams& p) {
  if (is_full_precision(p.bits)) {
    throw InvalidInput("quantization parameters cannot use the 16-bit fallback width");
  }
  if (!(p.scale > 0.0) || !std::isfinite(p.scale)) {
    throw InvalidInput("quantization scale must be positive and finite");
  }
  if (p.zero_point < 0 || p.zero_point > p.qmax()) {
    throw InvalidInput("zero point " + std::to_string(p.zero_point) + " outside [0, " +
                       std::to_string(p.qmax()) + "]");
  }
}

QuantParams affine_params(std::span<const double> x, BitWidth bits) {
  if (is_full_precision(bits)) {
    throw InvalidInput("affine_params: bits must be 2, 4 or 8");
  }
  if (x.empty()) {
    throw InvalidInput("affine_params: empty input");
  }
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw InvalidInput("affine_params: non-finite element at index " + std::to_string(i));
    }
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  QuantParams p;
  p.bits = bits;
  const auto levels = static_cast<double>(p.qmax());
  const double range = std::max(hi - lo, kRangeFloor);
  p.scale = snap_scale(range / levels);
  // -lo / scale, written so that exact ties (e.g. 255/2) stay exact.
  p.zero_point = std::clamp<std::int64_t>(round_half_up(-lo * levels / range), 0, p.qmax());
  return p;
}

std::vector<std::int64_t> quantize(std::span<const double> x, const QuantParams& p,
                                   Rounding rounding) {
  validate(p);
  std::vector<std::int64_t> q(x.size());
  std::transform(x.begin(), x.end(), q.begin(),
                 [&](double v) { return quantize_one(v, p, rounding); });
  return q;
}

std::vector<double> dequantize(std::span<const std::int64_t> q, const QuantParams& p) {
  validate(p);
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] < 0 || q[i] > p.qmax()) {
      throw InvalidInput("dequantize: level " + std::to_string(q[i]) + " at index " +
                         std::to_string(i) + " outside [0, " + std::to_string(p.qmax()) + "]");
    }
    out[i] = p.scale * static_cast<double>(q[i] - p.zero_point);
  }
  return out;
}

std::vector<double> fake_quant(std::span<const double> x, BitWidth bits, Rounding rounding) {
  std::vector<double> out(x.begin(), x.end());
  fake_quant_inplace(out, bits, rounding);
  return out;
}

void fake_quant_inplace(std::span<double> x, BitWidth bits, Rounding rounding) {
  if (is_full_precision(bits)) {
    return;
  }
  const QuantParams p = affine_params(x, bits);
  for (double& v : x) {
    v = p.scale * static_cast<double>(quantize_one(v, p, rounding) - p.zero_point);
  }
}

double action_error(const Action& a_hat, const Action& a_star) noexcept {
  const auto u = a_hat.flat();
  const auto v = a_star.flat();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace kinedispatch
