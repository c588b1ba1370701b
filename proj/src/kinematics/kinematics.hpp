#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "kinematics/types.hpp"

namespace twinarm::kin {

// Tool-point pose. Out-of-limit q is evaluated as given.
Pose forward_kinematics(const ArmModel& arm, const JointVector& q);

// Frame origins along the chain: base, shoulder, elbow, wrist, roll joint,
// tool point. Consecutive points bound the collision capsules.
std::array<Vec3, 6> link_points(const ArmModel& arm, const JointVector& q);

// Closed-form two-link solution in the link plane. The branch selects the sign
// of sin(theta2): elbow_up takes sin >= 0, elbow_down takes sin <= 0.
// Throws Unreachable outside the annulus and Degenerate at the origin when
// l1 == l2.
PlanarSolution planar_ik(const PlanarTarget& target);

Jacobian jacobian(const ArmModel& arm, const JointVector& q);

struct IkOptions {
  double tol_pos = 1e-4;   // m
  double tol_ang = 1e-3;   // rad
  int max_iters = 200;
  double damping = 0.05;
  double max_step = 0.5;   // rad, per-iteration cap on the update
};

enum class IkStatus { converged, not_converged, unreachable };

struct IterationReport {
  int iterations = 0;
  double position_residual = 0.0;  // m
  double angular_residual = 0.0;   // rad, max of pitch/roll error
};

struct IkResult {
  IkStatus status = IkStatus::not_converged;
  JointVector q;  // best effort when not converged
  IterationReport report;

  bool ok() const { return status == IkStatus::converged; }
};

// Damped least squares on the 5x5 pose Jacobian, clamped to joint limits
// after every update. The seed must be within limits.
IkResult ik_solve(const ArmModel& arm, const Pose& target,
                  const JointVector& seed, const IkOptions& opts = {});

// Analytic configuration for a pose, using planar_ik on the shoulder/elbow
// pair. Returns false when the wrist point is outside the planar annulus.
// The result is not clamped to limits.
bool analytic_configuration(const ArmModel& arm, const Pose& target,
                            ElbowBranch branch, JointVector& out);

// Tries the seed first, then analytic starts on both elbow branches.
IkResult ik_solve_robust(const ArmModel& arm, const Pose& target,
                         const JointVector& seed, const IkOptions& opts = {});

// Arm-description file (JSON, "twinarm-arm" v1).
ArmModel load_arm_file(const std::filesystem::path& path);
void save_arm_file(const ArmModel& arm, const std::filesystem::path& path);
std::string arm_json_text(const ArmModel& arm);

}  // namespace twinarm::kin
