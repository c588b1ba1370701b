#include "emulator/emulator.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/json_file.hpp"
#include "kinematics/kinematics.hpp"

namespace twinarm::emu {

double quantize(double value, double resolution) {
  if (!(resolution > 0.0)) return value;
  return std::round(value / resolution) * resolution;
}

ArmState make_state(const ArmModel& arm, const JointVector& q0,
                    const ServoProfile& servo, Tool tool) {
  ArmState s;
  s.q_actual = arm.clamp(q0);
  s.q_commanded = s.q_actual;
  for (std::size_t i = 0; i < kin::kDof; ++i) {
    s.q_measured[i] = quantize(s.q_actual[i], servo.resolution);
  }
  s.tool = tool;
  return s;
}

double payload_torque(const ArmModel& arm, const ArmState& state) {
  if (state.payload <= 0.0) return 0.0;
  const auto pts = kin::link_points(arm, state.q_actual);
  const double dx = pts[5].x - pts[1].x;
  const double dy = pts[5].y - pts[1].y;
  return state.payload * kGravity * std::hypot(dx, dy);
}

ArmState step(const ArmModel& arm, const ArmState& state,
              const JointVector& command, double dt,
              const ServoProfile& servo, Rng& rng) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "step: dt must be > 0");
  }
  if (!command.finite()) {
    throw Error(ErrorCode::invalid_argument, "step: non-finite command");
  }
  ArmState next = state;
  next.q_commanded = arm.clamp(command);
  next.limit_clamped = !(next.q_commanded == command);
  next.stalled = payload_torque(arm, state) > servo.max_torque;

  const double gain = 1.0 - std::exp(-dt / servo.time_constant);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < kin::kDof; ++i) {
    double q = state.q_actual[i];
    if (!next.stalled) {
      const double cap = arm.joints[i].max_velocity * dt;
      q += std::clamp((next.q_commanded[i] - q) * gain, -cap, cap);
      if (servo.jitter_std > 0.0) q += servo.jitter_std * unit(rng);
    }
    q = std::clamp(q, arm.joints[i].lower_limit, arm.joints[i].upper_limit);
    next.velocity[i] = (q - state.q_actual[i]) / dt;
    next.q_actual[i] = q;

    double reading = quantize(q, servo.resolution);
    if (servo.noise_std > 0.0) reading += servo.noise_std * unit(rng);
    next.q_measured[i] = reading;
  }
  return next;
}

ArmState step(const ArmModel& arm, const ArmState& state,
              const JointVector& command, double dt,
              const ServoProfile& servo, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return step(arm, state, command, dt, servo, rng);
}

ElectricalLoad electrical_load(const ArmState& state, bool moving,
                               double payload_fraction,
                               const PowerProfile& profile) {
  if (!(payload_fraction >= 0.0 && payload_fraction <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "payload_fraction must be in [0, 1]");
  }
  double current = profile.idle_current;
  if (state.stalled) {
    current = profile.load_current;
  } else if (moving) {
    const double share =
        profile.motion_share + (1.0 - profile.motion_share) * payload_fraction;
    current += (profile.load_current - profile.idle_current) * share;
  }
  return {current, profile.rated_power * current / profile.load_current};
}

Pose physical_tool_pose(const ArmModel& arm, const ArmState& state,
                        const JointVector& joint_offset) {
  return kin::forward_kinematics(arm, state.q_actual + joint_offset);
}

ArmState grasp(const ArmModel& arm, const ArmState& state, const Vial& vial,
               const JointVector& joint_offset, double max_payload,
               double reach_tol, double seat_tilt) {
  if (state.tool != Tool::gripper) {
    throw Error(ErrorCode::invalid_argument, "grasp: gripper tool required");
  }
  if (state.grasped) {
    throw Error(ErrorCode::invalid_argument, "grasp: gripper already holds " + state.grasped->id);
  }
  if (vial.mass > max_payload) {
    throw Error(ErrorCode::overweight, "grasp: '" + vial.id + "' exceeds the payload limit");
  }
  const Vec3 tip = physical_tool_pose(arm, state, joint_offset).position;
  if ((tip - vial.position).norm() > reach_tol) {
    throw Error(ErrorCode::out_of_reach, "grasp: '" + vial.id + "' is outside the gripper");
  }
  ArmState next = state;
  next.grasped = GraspedObject{vial.id, vial.mass, seat_tilt};
  next.payload += vial.mass;
  return next;
}

ArmState release(const ArmState& state) {
  ArmState next = state;
  if (next.grasped) {
    next.payload = std::max(0.0, next.payload - next.grasped->mass);
    next.grasped.reset();
  }
  return next;
}

double pipette_dispense(const ArmState& state, double commanded_volume,
                        double alignment_error, const PipetteConfig& cfg,
                        std::uint64_t rng_seed) {
  if (state.tool != Tool::pipette) {
    throw Error(ErrorCode::invalid_argument, "dispense: pipette tool required");
  }
  if (!(commanded_volume >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "dispense: commanded volume must be >= 0");
  }
  // A misaligned tip loses a share of the stroke proportional to the offset.
  const double bias = cfg.bias_per_m * alignment_error * commanded_volume;
  double noise = 0.0;
  if (cfg.noise_std > 0.0 && commanded_volume > 0.0) {
    Rng rng(rng_seed);
    noise = std::normal_distribution<double>(0.0, cfg.noise_std)(rng);
  }
  return std::max(0.0, commanded_volume + bias + noise);
}

EmulatorProfile without_errors(EmulatorProfile p) {
  p.servo.noise_std = 0.0;
  p.servo.jitter_std = 0.0;
  p.joint_offset = {};
  p.gripper.seat_tilt_mean = 0.0;
  p.gripper.seat_tilt_std = 0.0;
  p.pipette.bias_per_m = 0.0;
  p.pipette.noise_std = 0.0;
  return p;
}

EmulatorProfile load_emulator_profile(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path, "twinarm-emulator-profile", 1);
  EmulatorProfile p;
  p.label = json_get<std::string>(j, "label");

  const auto servo = json_get<nlohmann::json>(j, "servo");
  p.servo.time_constant = json_get<double>(servo, "time_constant_s");
  p.servo.resolution = json_get<double>(servo, "resolution_rad");
  p.servo.noise_std = json_get<double>(servo, "noise_std_rad");
  p.servo.jitter_std = json_get_or<double>(servo, "jitter_std_rad", 0.0);
  p.servo.max_torque = json_get<double>(servo, "max_torque_nm");

  const auto power = json_get<nlohmann::json>(j, "power");
  p.power.label = p.label;
  p.power.idle_current = json_get<double>(power, "idle_current_a");
  p.power.load_current = json_get<double>(power, "load_current_a");
  p.power.rated_power = json_get<double>(power, "rated_power_w");
  p.power.motion_share = json_get_or<double>(power, "motion_share", 0.5);

  const auto cal = json_get_or(j, "calibration", nlohmann::json::object());
  const auto offs = json_get_or<std::vector<double>>(cal, "joint_offset_rad", {});
  if (!offs.empty()) {
    if (offs.size() != kin::kDof) {
      throw Error(ErrorCode::parse, path.string() + ": joint_offset_rad needs 5 entries");
    }
    std::copy(offs.begin(), offs.end(), p.joint_offset.q.begin());
  }

  const auto grip = json_get_or(j, "gripper", nlohmann::json::object());
  p.gripper.max_payload = json_get_or<double>(grip, "max_payload_kg", 0.020);
  p.gripper.reach_tol = json_get_or<double>(grip, "reach_tol_m", 0.005);
  p.gripper.seat_tilt_mean = json_get_or<double>(grip, "seat_tilt_mean_rad", 0.0);
  p.gripper.seat_tilt_std = json_get_or<double>(grip, "seat_tilt_std_rad", 0.0);

  const auto pip = json_get_or(j, "pipette", nlohmann::json::object());
  p.pipette.bias_per_m = json_get_or<double>(pip, "bias_per_m", 0.0);
  p.pipette.noise_std = json_get_or<double>(pip, "noise_std_ml", 0.0);
  p.pipette.acceptance_band = json_get_or<double>(pip, "acceptance_band_ml", 0.3);

  const ServoProfile& s = p.servo;
  const PowerProfile& w = p.power;
  if (!(s.time_constant > 0.0) || !(s.resolution >= 0.0) || !(s.noise_std >= 0.0) ||
      !(s.jitter_std >= 0.0) || !(s.max_torque > 0.0)) {
    throw Error(ErrorCode::parse, path.string() + ": invalid servo profile");
  }
  if (!(w.idle_current > 0.0) || !(w.load_current >= w.idle_current) ||
      !(w.rated_power > 0.0) || !(w.motion_share >= 0.0 && w.motion_share <= 1.0)) {
    throw Error(ErrorCode::parse, path.string() + ": invalid power profile");
  }
  return p;
}

}  // namespace twinarm::emu
