#include <algorithm>
#include <cmath>
#include <string>

#include "common/angles.hpp"
#include "common/error.hpp"
#include "common/json_file.hpp"
#include "kinematics/kinematics.hpp"

namespace twinarm::kin {

double l2_distance(const JointVector& a, const JointVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kDof; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double max_abs_difference(const JointVector& a, const JointVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < kDof; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

JointVector lerp(const JointVector& a, const JointVector& b, double t) {
  JointVector r;
  for (std::size_t i = 0; i < kDof; ++i) r[i] = a[i] + (b[i] - a[i]) * t;
  return r;
}

double ArmModel::total_reach() const {
  double s = tool_offset;
  for (const auto& j : joints) s += j.link_length;
  return s;
}

double ArmModel::wrist_to_tool() const {
  return joints[kWristPitch].link_length + joints[kWristRoll].link_length +
         tool_offset;
}

bool ArmModel::within_limits(const JointVector& q) const {
  for (std::size_t i = 0; i < kDof; ++i) {
    if (q[i] < joints[i].lower_limit || q[i] > joints[i].upper_limit) {
      return false;
    }
  }
  return true;
}

JointVector ArmModel::clamp(const JointVector& q) const {
  JointVector r;
  for (std::size_t i = 0; i < kDof; ++i) {
    r[i] = std::clamp(q[i], joints[i].lower_limit, joints[i].upper_limit);
  }
  return r;
}

JointVector ArmModel::lower() const {
  JointVector r;
  for (std::size_t i = 0; i < kDof; ++i) r[i] = joints[i].lower_limit;
  return r;
}

JointVector ArmModel::upper() const {
  JointVector r;
  for (std::size_t i = 0; i < kDof; ++i) r[i] = joints[i].upper_limit;
  return r;
}

namespace {

constexpr Axis kAxisLayout[kDof] = {Axis::yaw, Axis::pitch, Axis::pitch,
                                     Axis::pitch, Axis::roll};

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::yaw: return "yaw";
    case Axis::pitch: return "pitch";
    case Axis::roll: return "roll";
  }
  return "?";
}

Axis parse_axis(const std::string& s) {
  if (s == "yaw") return Axis::yaw;
  if (s == "pitch") return Axis::pitch;
  if (s == "roll") return Axis::roll;
  throw Error(ErrorCode::parse, "unknown joint axis '" + s + "'");
}

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorCode::invalid_argument, "arm model: " + msg);
}

}  // namespace

void validate(const ArmModel& arm) {
  for (std::size_t i = 0; i < kDof; ++i) {
    const JointSpec& j = arm.joints[i];
    const std::string who = "joint " + std::to_string(i) + " (" + j.name + ")";
    if (j.axis != kAxisLayout[i]) {
      invalid(who + " must be a " + std::string(axis_name(kAxisLayout[i])) +
              " joint");
    }
    const bool roll = i == kWristRoll;
    if (!std::isfinite(j.link_length) || j.link_length < 0.0 ||
        (!roll && j.link_length == 0.0)) {
      invalid(who + " link_length must be > 0");
    }
    if (!(j.lower_limit < j.upper_limit)) {
      invalid(who + " requires lower_limit < upper_limit");
    }
    if (j.lower_limit <= -kPi || j.upper_limit > kPi) {
      invalid(who + " limits must lie in (-pi, pi]");
    }
    if (!(j.max_velocity > 0.0) || !(j.max_acceleration > 0.0)) {
      invalid(who + " velocity and acceleration limits must be > 0");
    }
  }
  if (!(arm.tool_offset >= 0.0)) invalid("tool_offset must be >= 0");
  if (!(arm.link_radius > 0.0)) invalid("link_radius must be > 0");
  if (!(arm.total_reach() > 0.0)) invalid("total reach must be > 0");
}

ArmModel default_arm() {
  ArmModel arm;
  arm.name = "desk5";
  arm.tool_offset = 0.04;
  arm.link_radius = 0.02;
  arm.joints = {{
      {"base_yaw", Axis::yaw, 0.10, -2.8, 2.8, 2.0, 8.0},
      {"shoulder_pitch", Axis::pitch, 0.15, -0.35, 2.8, 1.8, 6.0},
      {"elbow_pitch", Axis::pitch, 0.15, -2.7, 2.7, 2.0, 8.0},
      {"wrist_pitch", Axis::pitch, 0.06, -2.0, 2.0, 2.5, 10.0},
      {"wrist_roll", Axis::roll, 0.0, -3.0, 3.0, 2.5, 10.0},
  }};
  return arm;
}

ArmModel load_arm_file(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path, "twinarm-arm", 1);

  // Units are mandatory so a file written in mm or degrees fails loudly.
  const auto units = json_get<nlohmann::json>(j, "units");
  if (json_get<std::string>(units, "length") != "m" ||
      json_get<std::string>(units, "angle") != "rad" ||
      json_get<std::string>(units, "velocity") != "rad/s" ||
      json_get<std::string>(units, "acceleration") != "rad/s^2") {
    throw Error(ErrorCode::parse, path.string() +
                                      ": units must be m, rad, rad/s, rad/s^2");
  }

  ArmModel arm;
  arm.name = json_get<std::string>(j, "name");
  arm.tool_offset = json_get<double>(j, "tool_offset");
  arm.link_radius = json_get_or<double>(j, "link_radius", 0.02);
  const auto joints = json_get<nlohmann::json>(j, "joints");
  if (!joints.is_array() || joints.size() != kDof) {
    throw Error(ErrorCode::parse,
                path.string() + ": 'joints' must list exactly 5 joints");
  }
  for (std::size_t i = 0; i < kDof; ++i) {
    const auto& jj = joints[i];
    JointSpec& s = arm.joints[i];
    s.name = json_get<std::string>(jj, "name");
    s.axis = parse_axis(json_get<std::string>(jj, "axis"));
    s.link_length = json_get<double>(jj, "link_length");
    s.lower_limit = json_get<double>(jj, "lower_limit");
    s.upper_limit = json_get<double>(jj, "upper_limit");
    s.max_velocity = json_get<double>(jj, "max_velocity");
    s.max_acceleration = json_get<double>(jj, "max_acceleration");
  }
  validate(arm);
  return arm;
}

std::string arm_json_text(const ArmModel& arm) {
  nlohmann::json j;
  j["format"] = "twinarm-arm";
  j["version"] = 1;
  j["name"] = arm.name;
  j["units"] = {{"length", "m"},
                {"angle", "rad"},
                {"velocity", "rad/s"},
                {"acceleration", "rad/s^2"}};
  j["tool_offset"] = arm.tool_offset;
  j["link_radius"] = arm.link_radius;
  j["joints"] = nlohmann::json::array();
  for (const auto& s : arm.joints) {
    j["joints"].push_back({{"name", s.name},
                           {"axis", axis_name(s.axis)},
                           {"link_length", s.link_length},
                           {"lower_limit", s.lower_limit},
                           {"upper_limit", s.upper_limit},
                           {"max_velocity", s.max_velocity},
                           {"max_acceleration", s.max_acceleration}});
  }
  return j.dump(2) + "\n";
}

void save_arm_file(const ArmModel& arm, const std::filesystem::path& path) {
  write_text_file(path, arm_json_text(arm));
}

}  // namespace twinarm::kin
