#pragma once

// Uniform affine quantization at 2/4/8 bits.
//
//   q_i  = clamp(floor(x_i / s) + z, 0, 2^b - 1)
//   x̂_i = s * (q_i - z)
//
// s and z come from an asymmetric per-tensor min-max fit whose range always
// contains zero, so every element inside [min(x), max(x)] reconstructs
// within one step s. All functions are pure.

#include <cstdint>
#include <span>
#include <vector>

#include "kinedispatch/types.hpp"

namespace kinedispatch {

/// Floor on (max - min) so constant tensors still get a positive scale.
inline constexpr double kRangeFloor = 1e-8;

enum class Rounding { kFloor, kNearest };

struct QuantParams {
  double scale = 1.0;
  std::int64_t zero_point = 0;
  BitWidth bits = BitWidth::k8;

  std::int64_t qmax() const noexcept { return (std::int64_t{1} << bits_of(bits)) - 1; }
};

/// Throws InvalidInput for a non-positive scale, an out-of-range zero point or bits == 16.
void validate(const QuantParams& p);

QuantParams affine_params(std::span<const double> x, BitWidth bits);

std::vector<std::int64_t> quantize(std::span<const double> x, const QuantParams& p,
                                   Rounding rounding = Rounding::kFloor);

std::vector<double> dequantize(std::span<const std::int64_t> q, const QuantParams& p);

/// dequantize(quantize(x, p), p) with p = affine_params(x, bits). bits == 16 returns x.
std::vector<double> fake_quant(std::span<const double> x, BitWidth bits,
                               Rounding rounding = Rounding::kFloor);

/// In-place variant used on the policy hot path; avoids the integer round trip.
void fake_quant_inplace(std::span<double> x, BitWidth bits, Rounding rounding = Rounding::kFloor);

/// ‖a_hat - a_star‖₂ over the 7-dim command.
double action_error(const Action& a_hat, const Action& a_star) noexcept;

}  // namespace kinedispatch
