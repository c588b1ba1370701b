#include <doctest.h>

#include <cmath>

#include "emulator/emulator.hpp"
#include "kinematics/kinematics.hpp"
#include "test_support.hpp"

using namespace twinarm;
using namespace twinarm::emu;

namespace {

ServoProfile quiet_servo() {
  ServoProfile s;
  s.resolution = 0.0;
  return s;
}

EmulatorProfile profile(const char* name) {
  return load_emulator_profile(test::data_path(std::string("profiles/") + name + ".json"));
}

}  // namespace

TEST_SUITE("emulator") {

TEST_CASE("commanding the current position is a fixed point") {
  const auto arm = kin::default_arm();
  const JointVector q{{0.2, 0.3, -0.4, 0.1, 0.5}};
  ArmState s = make_state(arm, q, quiet_servo());
  for (int i = 0; i < 100; ++i) s = step(arm, s, q, 0.01, quiet_servo(), 1u);
  CHECK(s.q_actual == q);
  CHECK(s.velocity == JointVector{});
}

TEST_CASE("first-order response matches the closed form") {
  auto arm = kin::default_arm();
  for (auto& j : arm.joints) j.max_velocity = 1e6;
  const ServoProfile servo = quiet_servo();
  const JointVector target{{0.1, 0.1, -0.1, 0.1, 0.2}};
  ArmState s = make_state(arm, {}, servo);
  const double dt = 0.01;
  for (int n = 1; n <= 50; ++n) {
    s = step(arm, s, target, dt, servo, 1u);
    const double left = std::exp(-n * dt / servo.time_constant);
    for (std::size_t i = 0; i < kin::kDof; ++i) {
      REQUIRE(s.q_actual[i] == doctest::Approx(target[i] * (1 - left)).epsilon(1e-9));
    }
  }
}

TEST_CASE("velocity cap limits each step") {
  const auto arm = kin::default_arm();
  ArmState s = make_state(arm, {}, quiet_servo());
  s = step(arm, s, {{1.0, 0, 0, 0, 0}}, 0.01, quiet_servo(), 1u);
  CHECK(s.q_actual[0] == doctest::Approx(arm.joints[0].max_velocity * 0.01));
}

TEST_CASE("commands beyond the limits are clamped") {
  const auto arm = kin::default_arm();
  ServoProfile servo = quiet_servo();
  servo.jitter_std = 0.05;
  ArmState s = make_state(arm, {}, servo);
  const JointVector wild{{10, 10, -10, 10, -10}};
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    s = step(arm, s, wild, 0.01, servo, rng);
    REQUIRE(s.limit_clamped);
    REQUIRE(arm.within_limits(s.q_actual));
  }
  CHECK(arm.within_limits(s.q_commanded));
  s = step(arm, s, {}, 0.01, servo, rng);
  CHECK_FALSE(s.limit_clamped);
}

TEST_CASE("encoder readings are quantized") {
  CHECK(quantize(0.0022, 0.0015) == doctest::Approx(0.0015));
  CHECK(quantize(0.0023, 0.0015) == doctest::Approx(0.0030));
  CHECK(quantize(0.123, 0.0) == 0.123);
  const auto arm = kin::default_arm();
  ServoProfile servo;
  servo.resolution = 0.01;
  const ArmState s = make_state(arm, {{0.123, 0, 0, 0, 0}}, servo);
  CHECK(s.q_measured[0] == doctest::Approx(0.12));
}

TEST_CASE("step rejects bad input") {
  const auto arm = kin::default_arm();
  const ArmState s = make_state(arm, {}, quiet_servo());
  test::check_throws_code([&] { step(arm, s, {}, 0.0, quiet_servo(), 1u); }, ErrorCode::invalid_argument);
  test::check_throws_code([&] { step(arm, s, {{NAN, 0, 0, 0, 0}}, 0.01, quiet_servo(), 1u); },
                          ErrorCode::invalid_argument);
}

TEST_CASE("electrical load figures") {
  const ArmState s;
  const PowerProfile improved = profile("improved").power;
  const PowerProfile original = profile("original").power;
  CHECK(electrical_load(s, false, 0.0, improved).current == doctest::Approx(0.2));
  const ElectricalLoad full = electrical_load(s, true, 1.0, improved);
  CHECK(full.current == doctest::Approx(1.0));
  CHECK(full.power == doctest::Approx(50.0));
  CHECK(electrical_load(s, false, 0.0, original).current == doctest::Approx(0.25));
  const ElectricalLoad full_o = electrical_load(s, true, 1.0, original);
  CHECK(full_o.current == doctest::Approx(2.0));
  CHECK(full_o.power == doctest::Approx(100.0));

  double prev = 0.0;
  for (double f = 0.0; f <= 1.0; f += 0.1) {
    const double c = electrical_load(s, true, f, improved).current;
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(electrical_load(s, true, 0.0, improved).current > electrical_load(s, false, 0.0, improved).current);
  test::check_throws_code([&] { electrical_load(s, true, 1.5, improved); }, ErrorCode::invalid_argument);
}

TEST_CASE("grasp outcomes") {
  const auto arm = kin::default_arm();
  const ArmState s = make_state(arm, {}, quiet_servo());
  const Vec3 tip = kin::forward_kinematics(arm, {}).position;
  const ArmState held = grasp(arm, s, {"v1", 0.010, tip}, {}, 0.020, 0.002);
  REQUIRE(held.grasped);
  CHECK(held.grasped->id == "v1");
  CHECK(held.payload == doctest::Approx(0.010));
  const ArmState freed = release(held);
  CHECK_FALSE(freed.grasped);
  CHECK(freed.payload == 0.0);

  test::check_throws_code([&] { grasp(arm, s, {"heavy", 0.025, tip}, {}, 0.020, 0.002); },
                          ErrorCode::overweight);
  const Vec3 beyond = tip + Vec3{0.005, 0, 0};
  test::check_throws_code([&] { grasp(arm, s, {"far", 0.010, beyond}, {}, 0.020, 0.002); },
                          ErrorCode::out_of_reach);
  test::check_throws_code([&] { grasp(arm, held, {"v2", 0.010, tip}, {}, 0.020, 0.002); },
                          ErrorCode::invalid_argument);
}

TEST_CASE("calibration offset moves the physical tool") {
  const auto arm = kin::default_arm();
  const ArmState s = make_state(arm, {}, quiet_servo());
  const JointVector off{{0.01, 0, 0, 0, 0}};
  const Pose p = physical_tool_pose(arm, s, off);
  CHECK(p.position.y == doctest::Approx(0.40 * std::sin(0.01)));
}

TEST_CASE("pipette volume model") {
  ArmState s;
  s.tool = Tool::pipette;
  PipetteConfig cfg = profile("improved").pipette;
  CHECK(pipette_dispense(s, 0.0, 0.002, cfg, 1) == 0.0);

  PipetteConfig exact = cfg;
  exact.noise_std = 0.0;
  const double b1 = pipette_dispense(s, 1.0, 0.001, exact, 1) - 1.0;
  const double b2 = pipette_dispense(s, 1.0, 0.002, exact, 1) - 1.0;
  CHECK(b2 == doctest::Approx(2 * b1).epsilon(1e-12));
  CHECK(pipette_dispense(s, 1.0, 0.0, exact, 1) == 1.0);

  double sum = 0.0;
  int in_band = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double dev = pipette_dispense(s, 1.0, 0.0016, cfg, 1000 + i) - 1.0;
    sum += std::abs(dev);
    if (std::abs(dev) <= cfg.acceptance_band) ++in_band;
  }
  CHECK(sum / 1000 == doctest::Approx(0.2).epsilon(0.25));
  CHECK(std::abs(sum / 1000 - 0.2) <= 0.05);
  CHECK(in_band >= 950);

  ArmState g;
  test::check_throws_code([&] { pipette_dispense(g, 1.0, 0.0, cfg, 1); }, ErrorCode::invalid_argument);
}

TEST_CASE("without_errors removes every error source but quantization") {
  const EmulatorProfile p = without_errors(profile("original"));
  CHECK(p.servo.noise_std == 0.0);
  CHECK(p.servo.jitter_std == 0.0);
  CHECK(p.joint_offset == JointVector{});
  CHECK(p.pipette.bias_per_m == 0.0);
  CHECK(p.pipette.noise_std == 0.0);
  CHECK(p.gripper.seat_tilt_mean == 0.0);
  CHECK(p.servo.resolution == profile("original").servo.resolution);
}

TEST_CASE("heavy payload at long reach stalls the servos") {
  const auto arm = kin::default_arm();
  ArmState s = make_state(arm, {}, quiet_servo());
  s.payload = 5.0;
  const ArmState n = step(arm, s, {{0.3, 0, 0, 0, 0}}, 0.01, quiet_servo(), 1u);
  CHECK(n.stalled);
  CHECK(n.q_actual == s.q_actual);
  CHECK(electrical_load(n, true, 1.0, profile("improved").power).current == doctest::Approx(1.0));
}

TEST_CASE("profile files load and validate") {
  const EmulatorProfile p = profile("improved");
  CHECK(p.label == "improved");
  CHECK(p.servo.time_constant == doctest::Approx(0.08));
  const auto bad = test::write_temp("bad-profile.json", R"({"format": "twinarm-emulator-profile", "version": 1,
    "label": "x", "servo": {"time_constant_s": -1}})");
  CHECK_THROWS_AS(load_emulator_profile(bad), Error);
}

}  // TEST_SUITE
