#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Core>

namespace twinarm::kin {

inline constexpr std::size_t kDof = 5;

// Joint indices in chain order.
enum JointIndex : std::size_t {
  kBaseYaw = 0,
  kShoulder = 1,
  kElbow = 2,
  kWristPitch = 3,
  kWristRoll = 4,
};

enum class Axis { yaw, pitch, roll };

// Configuration-space point, radians.
struct JointVector {
  std::array<double, kDof> q{};

  double& operator[](std::size_t i) { return q[i]; }
  double operator[](std::size_t i) const { return q[i]; }

  bool finite() const {
    for (double v : q) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const JointVector&, const JointVector&) = default;

  friend JointVector operator+(JointVector a, const JointVector& b) {
    for (std::size_t i = 0; i < kDof; ++i) a.q[i] += b.q[i];
    return a;
  }
  friend JointVector operator-(JointVector a, const JointVector& b) {
    for (std::size_t i = 0; i < kDof; ++i) a.q[i] -= b.q[i];
    return a;
  }
  friend JointVector operator*(double s, JointVector a) {
    for (double& v : a.q) v *= s;
    return a;
  }
};

double l2_distance(const JointVector& a, const JointVector& b);
double max_abs_difference(const JointVector& a, const JointVector& b);
JointVector lerp(const JointVector& a, const JointVector& b, double t);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
  friend Vec3 operator+(Vec3 a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

// End-effector target. Yaw is implied by the base rotation.
struct Pose {
  Vec3 position;
  double pitch = 0.0;  // tool-axis elevation above horizontal
  double roll = 0.0;   // rotation about the tool axis

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct JointSpec {
  std::string name;
  Axis axis = Axis::pitch;
  double link_length = 0.0;  // m, distance to the next joint frame
  double lower_limit = 0.0;
  double upper_limit = 0.0;
  double max_velocity = 1.0;      // rad/s
  double max_acceleration = 1.0;  // rad/s^2
};

// The 5-DOF yaw-pitch-pitch-pitch-roll chain. Immutable once validated.
//
// Home convention: q = 0 puts the arm straight out along +x at the height of
// the base column. Pitch joints raise the distal chain for positive angles.
// The roll joint sits at the end of the wrist link, so its link_length is
// measured along the tool axis (it may be 0) and is followed by tool_offset.
struct ArmModel {
  std::string name;
  std::array<JointSpec, kDof> joints;
  double tool_offset = 0.0;  // m
  double link_radius = 0.02; // capsule radius for collision checking

  double total_reach() const;
  // Distance from the wrist-pitch joint to the tool point.
  double wrist_to_tool() const;

  bool within_limits(const JointVector& q) const;
  JointVector clamp(const JointVector& q) const;
  JointVector lower() const;
  JointVector upper() const;
};

// Throws Error(invalid_argument) naming the first violated invariant.
void validate(const ArmModel& arm);

// Desk-scale defaults: links 0.10/0.15/0.15/0.06 m, tool 0.04 m.
ArmModel default_arm();

enum class ElbowBranch { elbow_up, elbow_down };

struct PlanarTarget {
  double x = 0.0;
  double y = 0.0;
  double l1 = 1.0;
  double l2 = 1.0;
  ElbowBranch branch = ElbowBranch::elbow_up;
};

struct PlanarSolution {
  double theta1 = 0.0;
  double theta2 = 0.0;
};

// Rows: x-dot, y-dot, z-dot, pitch rate, roll rate.
using Jacobian = Eigen::Matrix<double, 5, 5>;

}  // namespace twinarm::kin
