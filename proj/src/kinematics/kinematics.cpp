#include "kinematics/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "common/angles.hpp"
#include "common/error.hpp"

namespace twinarm::kin {

namespace {

struct PlaneChain {
  double r = 0.0;  // horizontal distance from the base axis
  double h = 0.0;  // height
};

// Link lengths as seen in the vertical plane of the arm.
struct PlaneLengths {
  double column, upper, fore, wrist;
};

PlaneLengths plane_lengths(const ArmModel& arm) {
  return {arm.joints[kBaseYaw].link_length, arm.joints[kShoulder].link_length,
          arm.joints[kElbow].link_length, arm.wrist_to_tool()};
}

}  // namespace

Pose forward_kinematics(const ArmModel& arm, const JointVector& q) {
  const PlaneLengths L = plane_lengths(arm);
  const double a1 = q[kShoulder];
  const double a2 = a1 + q[kElbow];
  const double a3 = a2 + q[kWristPitch];

  PlaneChain p;
  p.r = L.upper * std::cos(a1) + L.fore * std::cos(a2) + L.wrist * std::cos(a3);
  p.h = L.column + L.upper * std::sin(a1) + L.fore * std::sin(a2) +
        L.wrist * std::sin(a3);

  Pose pose;
  pose.position = {p.r * std::cos(q[kBaseYaw]), p.r * std::sin(q[kBaseYaw]), p.h};
  pose.pitch = normalize_angle(a3);
  pose.roll = normalize_angle(q[kWristRoll]);
  return pose;
}

std::array<Vec3, 6> link_points(const ArmModel& arm, const JointVector& q) {
  const double cy = std::cos(q[kBaseYaw]);
  const double sy = std::sin(q[kBaseYaw]);
  auto lift = [&](double r, double h) { return Vec3{r * cy, r * sy, h}; };

  const double a1 = q[kShoulder];
  const double a2 = a1 + q[kElbow];
  const double a3 = a2 + q[kWristPitch];
  const double column = arm.joints[kBaseYaw].link_length;

  double r = 0.0;
  double h = column;
  std::array<Vec3, 6> pts;
  pts[0] = {0.0, 0.0, 0.0};
  pts[1] = lift(r, h);
  r += arm.joints[kShoulder].link_length * std::cos(a1);
  h += arm.joints[kShoulder].link_length * std::sin(a1);
  pts[2] = lift(r, h);
  r += arm.joints[kElbow].link_length * std::cos(a2);
  h += arm.joints[kElbow].link_length * std::sin(a2);
  pts[3] = lift(r, h);
  r += arm.joints[kWristPitch].link_length * std::cos(a3);
  h += arm.joints[kWristPitch].link_length * std::sin(a3);
  pts[4] = lift(r, h);
  const double tail = arm.joints[kWristRoll].link_length + arm.tool_offset;
  pts[5] = lift(r + tail * std::cos(a3), h + tail * std::sin(a3));
  return pts;
}

PlanarSolution planar_ik(const PlanarTarget& t) {
  if (!(t.l1 > 0.0) || !(t.l2 > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "planar_ik: link lengths must be > 0");
  }
  if (!std::isfinite(t.x) || !std::isfinite(t.y)) {
    throw Error(ErrorCode::invalid_argument, "planar_ik: non-finite target");
  }
  if (t.x == 0.0 && t.y == 0.0 && t.l1 == t.l2) {
    throw Error(ErrorCode::degenerate,
                "planar_ik: target at the origin with equal links has no unique theta1");
  }

  const double r2 = t.x * t.x + t.y * t.y;
  const double outer = (t.l1 + t.l2) * (t.l1 + t.l2);
  const double inner = (t.l1 - t.l2) * (t.l1 - t.l2);
  // Relative slack absorbs round-off for targets generated exactly on the rim.
  const double slack = 1e-12 * outer;
  if (r2 > outer + slack || r2 < inner - slack) {
    throw Error(ErrorCode::unreachable, "planar_ik: target outside the reachable annulus");
  }

  double c = (r2 - t.l1 * t.l1 - t.l2 * t.l2) / (2.0 * t.l1 * t.l2);
  c = std::clamp(c, -1.0, 1.0);
  double s = std::sqrt(1.0 - c * c);
  if (t.branch == ElbowBranch::elbow_down) s = -s;

  PlanarSolution sol;
  sol.theta2 = std::atan2(s, c);
  sol.theta1 = std::atan2(t.y, t.x) - std::atan2(t.l2 * s, t.l1 + t.l2 * c);
  sol.theta1 = normalize_angle(sol.theta1);
  sol.theta2 = normalize_angle(sol.theta2);
  return sol;
}

Jacobian jacobian(const ArmModel& arm, const JointVector& q) {
  const PlaneLengths L = plane_lengths(arm);
  const double a1 = q[kShoulder];
  const double a2 = a1 + q[kElbow];
  const double a3 = a2 + q[kWristPitch];
  const double s1 = std::sin(a1), c1 = std::cos(a1);
  const double s2 = std::sin(a2), c2 = std::cos(a2);
  const double s3 = std::sin(a3), c3 = std::cos(a3);
  const double cy = std::cos(q[kBaseYaw]);
  const double sy = std::sin(q[kBaseYaw]);

  const double r = L.upper * c1 + L.fore * c2 + L.wrist * c3;

  // Partial derivatives of (r, h) w.r.t. the three pitch joints.
  const double dr[3] = {-(L.upper * s1 + L.fore * s2 + L.wrist * s3),
                        -(L.fore * s2 + L.wrist * s3), -L.wrist * s3};
  const double dh[3] = {L.upper * c1 + L.fore * c2 + L.wrist * c3,
                        L.fore * c2 + L.wrist * c3, L.wrist * c3};

  Jacobian J = Jacobian::Zero();
  J(0, kBaseYaw) = -r * sy;
  J(1, kBaseYaw) = r * cy;
  for (int k = 0; k < 3; ++k) {
    J(0, 1 + k) = dr[k] * cy;
    J(1, 1 + k) = dr[k] * sy;
    J(2, 1 + k) = dh[k];
    J(3, 1 + k) = 1.0;
  }
  J(4, kWristRoll) = 1.0;
  return J;
}

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;

Vec5 pose_error(const Pose& target, const Pose& current) {
  Vec5 e;
  e << target.position.x - current.position.x,
      target.position.y - current.position.y,
      target.position.z - current.position.z,
      normalize_angle(target.pitch - current.pitch),
      normalize_angle(target.roll - current.roll);
  return e;
}

// Pitch within the angular tolerance past vertical is pulled onto the bound,
// so poses read back from a converged solve stay valid targets.
Pose checked_target(Pose target, double tol_ang) {
  const Vec3& p = target.position;
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
      !std::isfinite(target.pitch) || !std::isfinite(target.roll)) {
    throw Error(ErrorCode::invalid_argument, "ik: non-finite target pose");
  }
  if (target.pitch < -kPi / 2 - tol_ang || target.pitch > kPi / 2 + tol_ang) {
    throw Error(ErrorCode::invalid_argument, "ik: target pitch outside [-pi/2, pi/2]");
  }
  target.pitch = std::clamp(target.pitch, -kPi / 2, kPi / 2);
  return target;
}

}  // namespace

IkResult ik_solve(const ArmModel& arm, const Pose& requested,
                  const JointVector& seed, const IkOptions& opts) {
  const Pose target = checked_target(requested, opts.tol_ang);
  if (!seed.finite() || !arm.within_limits(seed)) {
    throw Error(ErrorCode::invalid_argument, "ik: seed outside joint limits");
  }

  IkResult result;
  result.q = seed;
  if (target.position.norm() > arm.total_reach()) {
    result.status = IkStatus::unreachable;
    const Pose at = forward_kinematics(arm, seed);
    const Vec5 e = pose_error(target, at);
    result.report.position_residual = e.head<3>().norm();
    result.report.angular_residual = std::max(std::abs(e(3)), std::abs(e(4)));
    return result;
  }

  const double lambda2 = opts.damping * opts.damping;
  JointVector q = seed;
  double best_score = std::numeric_limits<double>::infinity();

  for (int it = 0;; ++it) {
    const Vec5 e = pose_error(target, forward_kinematics(arm, q));
    const double pos_res = e.head<3>().norm();
    const double ang_res = std::max(std::abs(e(3)), std::abs(e(4)));
    const double score = pos_res + arm.wrist_to_tool() * ang_res;
    if (score < best_score) {
      best_score = score;
      result.q = q;
      result.report = {it, pos_res, ang_res};
    }
    if (pos_res <= opts.tol_pos && ang_res <= opts.tol_ang) {
      result.status = IkStatus::converged;
      result.q = q;
      result.report = {it, pos_res, ang_res};
      return result;
    }
    if (it >= opts.max_iters) break;

    const Jacobian J = jacobian(arm, q);
    const Eigen::Matrix<double, 5, 5> A =
        J * J.transpose() + lambda2 * Eigen::Matrix<double, 5, 5>::Identity();
    Vec5 dq = J.transpose() * A.ldlt().solve(e);
    const double peak = dq.cwiseAbs().maxCoeff();
    if (peak > opts.max_step) dq *= opts.max_step / peak;

    JointVector next = q;
    for (std::size_t i = 0; i < kDof; ++i) next[i] += dq(static_cast<Eigen::Index>(i));
    q = arm.clamp(next);
  }

  result.status = IkStatus::not_converged;
  result.report.iterations = opts.max_iters;
  return result;
}

bool analytic_configuration(const ArmModel& arm, const Pose& target,
                            ElbowBranch branch, JointVector& out) {
  const Vec3& p = target.position;
  const double r = std::hypot(p.x, p.y);
  const double yaw = r > 0.0 ? std::atan2(p.y, p.x) : 0.0;
  const double lw = arm.wrist_to_tool();
  const double wr = r - lw * std::cos(target.pitch);
  const double wh = p.z - arm.joints[kBaseYaw].link_length - lw * std::sin(target.pitch);

  PlanarSolution sol;
  try {
    sol = planar_ik({wr, wh, arm.joints[kShoulder].link_length,
                     arm.joints[kElbow].link_length, branch});
  } catch (const Error&) {
    return false;
  }
  out[kBaseYaw] = yaw;
  out[kShoulder] = sol.theta1;
  out[kElbow] = sol.theta2;
  out[kWristPitch] = normalize_angle(target.pitch - sol.theta1 - sol.theta2);
  out[kWristRoll] = normalize_angle(target.roll);
  return true;
}

IkResult ik_solve_robust(const ArmModel& arm, const Pose& target,
                         const JointVector& seed, const IkOptions& opts) {
  IkResult best = ik_solve(arm, target, seed, opts);
  if (best.status != IkStatus::not_converged) return best;

  for (ElbowBranch branch : {ElbowBranch::elbow_down, ElbowBranch::elbow_up}) {
    JointVector start;
    if (!analytic_configuration(arm, target, branch, start)) continue;
    IkResult r = ik_solve(arm, target, arm.clamp(start), opts);
    if (r.ok()) return r;
    if (r.report.position_residual < best.report.position_residual) best = r;
  }
  return best;
}

}  // namespace twinarm::kin
