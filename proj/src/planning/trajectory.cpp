#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "planning/planning.hpp"

namespace twinarm::plan {

namespace {

// Normalized rest-to-rest profile for s: 0 -> 1 under rate/accel caps.
Trajectory::Segment make_segment(const ArmModel& arm, const JointVector& from,
                                 const JointVector& to, double t0) {
  double rate_cap = std::numeric_limits<double>::infinity();
  double accel_cap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < kin::kDof; ++j) {
    const double d = std::abs(to[j] - from[j]);
    if (d == 0.0) continue;
    rate_cap = std::min(rate_cap, arm.joints[j].max_velocity / d);
    accel_cap = std::min(accel_cap, arm.joints[j].max_acceleration / d);
  }

  Trajectory::Segment seg;
  seg.from = from;
  seg.to = to;
  seg.t0 = t0;
  seg.accel = accel_cap;
  if (rate_cap * rate_cap / accel_cap <= 1.0) {
    seg.peak_rate = rate_cap;
    seg.accel_time = rate_cap / accel_cap;
    seg.duration = 1.0 / rate_cap + rate_cap / accel_cap;
  } else {
    seg.accel_time = std::sqrt(1.0 / accel_cap);
    seg.peak_rate = accel_cap * seg.accel_time;
    seg.duration = 2.0 * seg.accel_time;
  }
  return seg;
}

// (s, ds/dt) at local time tau.
std::pair<double, double> profile(const Trajectory::Segment& seg, double tau) {
  const double ta = seg.accel_time;
  const double T = seg.duration;
  const double A = seg.accel;
  if (tau <= 0.0) return {0.0, 0.0};
  if (tau >= T) return {1.0, 0.0};
  if (tau < ta) return {0.5 * A * tau * tau, A * tau};
  if (tau <= T - ta) return {0.5 * A * ta * ta + seg.peak_rate * (tau - ta), seg.peak_rate};
  const double rem = T - tau;
  return {1.0 - 0.5 * A * rem * rem, A * rem};
}

}  // namespace

Trajectory::Trajectory(JointVector start, std::vector<Segment> segments)
    : start_(start), segments_(std::move(segments)) {}

double Trajectory::duration() const {
  if (segments_.empty()) return 0.0;
  const Segment& last = segments_.back();
  return last.t0 + last.duration;
}

const JointVector& Trajectory::end() const {
  return segments_.empty() ? start_ : segments_.back().to;
}

TrajectorySample Trajectory::evaluate(double t) const {
  TrajectorySample out;
  out.t = t;
  if (segments_.empty() || t <= 0.0) {
    out.q = start_;
    return out;
  }
  if (t >= duration()) {
    out.q = end();
    return out;
  }
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const Segment& s) { return v < s.t0; });
  const Segment& seg = *std::prev(it);
  const auto [s, sdot] = profile(seg, t - seg.t0);
  for (std::size_t j = 0; j < kin::kDof; ++j) {
    const double d = seg.to[j] - seg.from[j];
    out.q[j] = seg.from[j] + d * s;
    out.qdot[j] = d * sdot;
  }
  return out;
}

std::vector<TrajectorySample> Trajectory::samples(double period) const {
  if (!(period > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "trajectory: sample period must be > 0");
  }
  std::vector<TrajectorySample> out;
  const double T = duration();
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) * period;
    if (t >= T) break;
    out.push_back(evaluate(t));
  }
  out.push_back(evaluate(T));
  return out;
}

Trajectory time_parameterize(const ArmModel& arm, const Path& path) {
  if (path.waypoints.empty()) {
    throw Error(ErrorCode::invalid_argument, "trajectory: empty path");
  }
  std::vector<Trajectory::Segment> segs;
  double t = 0.0;
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    if (path.waypoints[i] == path.waypoints[i - 1]) continue;
    segs.push_back(make_segment(arm, path.waypoints[i - 1], path.waypoints[i], t));
    t += segs.back().duration;
  }
  return Trajectory(path.waypoints.front(), std::move(segs));
}

}  // namespace twinarm::plan
