#include "kinedispatch/types.hpp"

#include <cmath>
#include <string>

namespace kinedispatch {

BitWidth bit_width_from_int(int value) {
  switch (value) {
    case 2: return BitWidth::k2;
    case 4: return BitWidth::k4;
    case 8: return BitWidth::k8;
    case 16: return BitWidth::k16;
    default: break;
  }
  throw InvalidInput("bit-width must be one of {2, 4, 8, 16}, got " + std::to_string(value));
}

void validate_action(const Action& a) {
  const auto v = a.flat();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw InvalidInput("action component " + std::to_string(i) + " is not finite");
    }
  }
  if (a.gripper < 0.0 || a.gripper > 1.0) {
    throw InvalidInput("gripper command must lie in [0, 1]");
  }
}

double norm(const Vec3& v) noexcept { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 operator-(const Vec3& a, const Vec3& b) noexcept {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

Vec3 operator+(const Vec3& a, const Vec3& b) noexcept {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

Vec3 operator*(double s, const Vec3& v) noexcept { return {s * v[0], s * v[1], s * v[2]}; }

}  // namespace kinedispatch
