#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "kinematics/types.hpp"

namespace twinarm::emu {

using kin::ArmModel;
using kin::JointVector;
using kin::Pose;
using kin::Vec3;
using Rng = std::mt19937_64;

inline constexpr double kGravity = 9.80665;

// One profile shared by all five servos.
struct ServoProfile {
  double time_constant = 0.08;  // s, first-order lag
  double resolution = 0.0015;   // rad, encoder quantum (0 disables)
  double noise_std = 0.0;       // rad, encoder read noise
  double jitter_std = 0.0;      // rad per tick, actuator process noise
  double max_torque = 7.845;    // N*m, 80 kg*cm
};

// Table-style electrical figures. Power is proportional to current, so the
// implied supply voltage is rated_power / load_current.
struct PowerProfile {
  std::string label;
  double idle_current = 0.2;   // A
  double load_current = 1.0;   // A, moving at full payload
  double rated_power = 50.0;   // W, at load_current
  double motion_share = 0.5;   // fraction of (load - idle) drawn moving empty
};

struct GripperConfig {
  double max_payload = 0.020;   // kg
  double reach_tol = 0.005;     // m
  double seat_tilt_mean = 0.0;  // rad, vial tilt in the jaws
  double seat_tilt_std = 0.0;
};

struct PipetteConfig {
  double bias_per_m = 0.0;        // relative volume bias per metre of tip misalignment
  double noise_std = 0.0;         // mL
  double acceptance_band = 0.3;   // mL, |deviation| counted as a success
};

// Everything that distinguishes one physical-arm calibration from another.
struct EmulatorProfile {
  std::string label;
  ServoProfile servo;
  PowerProfile power;
  JointVector joint_offset;  // rad, physical zero minus model zero
  GripperConfig gripper;
  PipetteConfig pipette;
};

// Disables every stochastic and systematic error source; quantization stays.
EmulatorProfile without_errors(EmulatorProfile profile);

EmulatorProfile load_emulator_profile(const std::filesystem::path& path);

enum class Tool { gripper, pipette };

struct GraspedObject {
  std::string id;
  double mass = 0.0;        // kg
  double seat_tilt = 0.0;   // rad
};

struct ArmState {
  JointVector q_actual;     // servo shaft angles
  JointVector q_commanded;  // last command after clamping
  JointVector q_measured;   // encoder reading
  JointVector velocity;     // rad/s over the last step
  double payload = 0.0;     // kg
  Tool tool = Tool::gripper;
  std::optional<GraspedObject> grasped;
  bool limit_clamped = false;
  bool stalled = false;
};

ArmState make_state(const ArmModel& arm, const JointVector& q0,
                    const ServoProfile& servo, Tool tool = Tool::gripper);

double quantize(double value, double resolution);

// Advances the servos by dt: each joint approaches the clamped command with a
// first-order response capped at its max velocity, then the encoder reading
// is quantized and noised.
ArmState step(const ArmModel& arm, const ArmState& state,
              const JointVector& command, double dt,
              const ServoProfile& servo, Rng& rng);
ArmState step(const ArmModel& arm, const ArmState& state,
              const JointVector& command, double dt,
              const ServoProfile& servo, std::uint64_t rng_seed);

// Shoulder torque needed to hold the payload at the current reach.
double payload_torque(const ArmModel& arm, const ArmState& state);

struct ElectricalLoad {
  double current = 0.0;  // A
  double power = 0.0;    // W
};

ElectricalLoad electrical_load(const ArmState& state, bool moving,
                               double payload_fraction,
                               const PowerProfile& profile);

// Pose of the physical tool point, including the calibration offset.
Pose physical_tool_pose(const ArmModel& arm, const ArmState& state,
                        const JointVector& joint_offset);

struct Vial {
  std::string id;
  double mass = 0.0;  // kg
  Vec3 position;
};

ArmState grasp(const ArmModel& arm, const ArmState& state, const Vial& vial,
               const JointVector& joint_offset, double max_payload,
               double reach_tol, double seat_tilt = 0.0);

ArmState release(const ArmState& state);

// Returns the dispensed volume in mL.
double pipette_dispense(const ArmState& state, double commanded_volume,
                        double alignment_error, const PipetteConfig& cfg,
                        std::uint64_t rng_seed);

}  // namespace twinarm::emu
