#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "kinematics/kinematics.hpp"
#include "planning/planning.hpp"

namespace twinarm::plan {

namespace {

double axis(const Vec3& v, int k) { return k == 0 ? v.x : (k == 1 ? v.y : v.z); }

bool finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

double point_box_sq(const Vec3& p, const Box& box) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double v = axis(p, k);
    const double lo = axis(box.min, k);
    const double hi = axis(box.max, k);
    const double d = v < lo ? lo - v : (v > hi ? v - hi : 0.0);
    s += d * d;
  }
  return s;
}

}  // namespace

void validate(const ObstacleSet& obstacles) {
  for (const auto& s : obstacles.spheres) {
    if (!finite(s.center) || !(s.radius > 0.0)) {
      throw Error(ErrorCode::invalid_argument, "sphere radius must be > 0");
    }
  }
  for (const auto& b : obstacles.boxes) {
    if (!finite(b.min) || !finite(b.max) || !(b.min.x < b.max.x) ||
        !(b.min.y < b.max.y) || !(b.min.z < b.max.z)) {
      throw Error(ErrorCode::invalid_argument, "box min must be < max componentwise");
    }
  }
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double point_box_distance(const Vec3& p, const Box& box) {
  return std::sqrt(point_box_sq(p, box));
}

// The squared distance from a(t) = a + t (b - a) to the box is convex and
// piecewise quadratic in t, with breaks where a coordinate crosses a face
// plane. Minimizing the quadratic inside every piece gives the exact minimum.
double segment_box_distance(const Vec3& a, const Vec3& b, const Box& box) {
  const Vec3 d = b - a;
  std::array<double, 8> breaks{};
  std::size_t n = 0;
  breaks[n++] = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double dk = axis(d, k);
    if (dk == 0.0) continue;
    for (double face : {axis(box.min, k), axis(box.max, k)}) {
      const double t = (face - axis(a, k)) / dk;
      if (t > 0.0 && t < 1.0) breaks[n++] = t;
    }
  }
  breaks[n++] = 1.0;
  std::sort(breaks.begin(), breaks.begin() + static_cast<std::ptrdiff_t>(n));

  auto at = [&](double t) { return a + t * d; };
  double best = std::min(point_box_sq(a, box), point_box_sq(b, box));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double t0 = breaks[i];
    const double t1 = breaks[i + 1];
    if (t1 <= t0) continue;
    const Vec3 mid = at(0.5 * (t0 + t1));
    double num = 0.0;
    double den = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double v = axis(mid, k);
      const double lo = axis(box.min, k);
      const double hi = axis(box.max, k);
      double c;
      if (v < lo) {
        c = axis(a, k) - lo;
      } else if (v > hi) {
        c = axis(a, k) - hi;
      } else {
        continue;
      }
      num += c * axis(d, k);
      den += axis(d, k) * axis(d, k);
    }
    const double t = den > 0.0 ? std::clamp(-num / den, t0, t1) : t0;
    best = std::min(best, point_box_sq(at(t), box));
  }
  return std::sqrt(best);
}

bool collision_free(const ArmModel& arm, const JointVector& q,
                    const ObstacleSet& obstacles, double clearance) {
  if (obstacles.empty()) return true;
  const auto pts = kin::link_points(arm, q);
  const double margin = arm.link_radius + clearance;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec3& a = pts[i];
    const Vec3& b = pts[i + 1];
    for (const auto& s : obstacles.spheres) {
      if (point_segment_distance(s.center, a, b) < s.radius + margin) return false;
    }
    for (const auto& box : obstacles.boxes) {
      if (segment_box_distance(a, b, box) < margin) return false;
    }
  }
  return true;
}

double path_length(const Path& path) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    len += kin::l2_distance(path.waypoints[i - 1], path.waypoints[i]);
  }
  return len;
}

bool edge_collision_free(const ArmModel& arm, const JointVector& a,
                         const JointVector& b, const ObstacleSet& obstacles,
                         double clearance, double spacing) {
  if (obstacles.empty()) return true;
  const double span = kin::max_abs_difference(a, b);
  const int steps = std::max(1, static_cast<int>(std::ceil(span / spacing)));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    if (!collision_free(arm, kin::lerp(a, b, t), obstacles, clearance)) return false;
  }
  return true;
}

bool path_collision_free(const ArmModel& arm, const Path& path,
                         const ObstacleSet& obstacles, double clearance,
                         double spacing) {
  if (path.waypoints.empty()) return false;
  if (path.waypoints.size() == 1) {
    return collision_free(arm, path.waypoints.front(), obstacles, clearance);
  }
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    if (!edge_collision_free(arm, path.waypoints[i - 1], path.waypoints[i],
                             obstacles, clearance, spacing)) {
      return false;
    }
  }
  return true;
}

}  // namespace twinarm::plan
