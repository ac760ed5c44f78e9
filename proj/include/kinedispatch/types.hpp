#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace kinedispatch {

/// Rejected user input (malformed vectors, non-finite values, bad files).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation's precondition (e.g. Φ queried above θ_fp).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Activation bit-width. 16 is the full-precision fallback; the enumerator
/// values are the bit counts so the built-in ordering is 2 < 4 < 8 < 16.
enum class BitWidth : std::uint8_t { k2 = 2, k4 = 4, k8 = 8, k16 = 16 };

inline constexpr std::array<BitWidth, 4> kAllBitWidths = {BitWidth::k2, BitWidth::k4,
                                                          BitWidth::k8, BitWidth::k16};
inline constexpr std::array<BitWidth, 3> kQuantizedBitWidths = {BitWidth::k2, BitWidth::k4,
                                                                BitWidth::k8};

constexpr int bits_of(BitWidth b) noexcept { return static_cast<int>(b); }

constexpr bool is_full_precision(BitWidth b) noexcept { return b == BitWidth::k16; }

/// Index of b in kAllBitWidths (2→0, 4→1, 8→2, 16→3).
constexpr std::size_t bit_index(BitWidth b) noexcept {
  switch (b) {
    case BitWidth::k2: return 0;
    case BitWidth::k4: return 1;
    case BitWidth::k8: return 2;
    case BitWidth::k16: return 3;
  }
  return 3;
}

/// Throws InvalidInput unless value ∈ {2, 4, 8, 16}.
BitWidth bit_width_from_int(int value);

constexpr BitWidth max_bits(BitWidth a, BitWidth b) noexcept { return a < b ? b : a; }

using Vec3 = std::array<double, 3>;

/// One control command: translational delta, rotational delta (radians), gripper opening.
struct Action {
  Vec3 xyz{0.0, 0.0, 0.0};
  Vec3 rot{0.0, 0.0, 0.0};
  double gripper = 0.0;

  static constexpr std::size_t kDim = 7;

  std::array<double, kDim> flat() const noexcept {
    return {xyz[0], xyz[1], xyz[2], rot[0], rot[1], rot[2], gripper};
  }
  static Action from_flat(const std::array<double, kDim>& v) noexcept {
    return Action{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, v[6]};
  }

  bool operator==(const Action&) const = default;
};

/// Throws InvalidInput if any component is non-finite or the gripper leaves [0, 1].
void validate_action(const Action& a);

double norm(const Vec3& v) noexcept;
Vec3 operator-(const Vec3& a, const Vec3& b) noexcept;
Vec3 operator+(const Vec3& a, const Vec3& b) noexcept;
Vec3 operator*(double s, const Vec3& v) noexcept;

}  // namespace kinedispatch
