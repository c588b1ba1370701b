#pragma once

#include <cmath>
#include <numbers>

namespace twinarm {

inline constexpr double kPi = std::numbers::pi;

// Wraps to (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

inline double deg(double rad) { return rad * 180.0 / kPi; }
inline double rad(double deg) { return deg * kPi / 180.0; }

}  // namespace twinarm
