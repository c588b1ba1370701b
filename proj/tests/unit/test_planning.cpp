#include <doctest.h>

#include <cmath>

#include "common/error.hpp"
#include "kinematics/kinematics.hpp"
#include "planning/planning.hpp"
#include "test_support.hpp"

using namespace twinarm;
using namespace twinarm::plan;

namespace {

const JointVector kStart{{-0.8, 0.3, 0.4, -0.5, 0.0}};
const JointVector kGoal{{0.8, 0.5, -0.3, 0.2, 0.6}};

PlannerParams params(std::uint64_t seed) {
  PlannerParams p;
  p.rng_seed = seed;
  return p;
}

}  // namespace

TEST_SUITE("planning") {

TEST_CASE("distance helpers") {
  CHECK(point_segment_distance({0, 1, 0}, {-1, 0, 0}, {1, 0, 0}) == doctest::Approx(1.0));
  CHECK(point_segment_distance({3, 0, 0}, {-1, 0, 0}, {1, 0, 0}) == doctest::Approx(2.0));
  const Box b{{0, 0, 0}, {1, 1, 1}};
  CHECK(point_box_distance({0.5, 0.5, 0.5}, b) == 0.0);
  CHECK(point_box_distance({2, 0.5, 0.5}, b) == doctest::Approx(1.0));
  CHECK(segment_box_distance({2, -1, 0.5}, {2, 2, 0.5}, b) == doctest::Approx(1.0));
  CHECK(segment_box_distance({-1, 0.5, 0.5}, {2, 0.5, 0.5}, b) == doctest::Approx(0.0));
}

TEST_CASE("collision check sees an obstacle at the tool") {
  const auto arm = kin::default_arm();
  ObstacleSet obs;
  obs.spheres.push_back({kin::forward_kinematics(arm, {}).position, 0.01});
  CHECK_FALSE(collision_free(arm, {}, obs, 0.0));
  CHECK(collision_free(arm, {}, {}, 0.0));
  JointVector turned{{1.5, 0, 0, 0, 0}};
  CHECK(collision_free(arm, turned, obs, 0.005));
}

TEST_CASE("empty scene plans succeed and are short") {
  const auto arm = kin::default_arm();
  const double straight = kin::l2_distance(kStart, kGoal);
  const Path rrt = plan_rrt(arm, kStart, kGoal, {}, params(1));
  CHECK(rrt.waypoints.front() == kStart);
  CHECK(rrt.waypoints.back() == kGoal);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const Path prm = plan_prm(arm, kStart, kGoal, {}, params(s));
    CHECK(prm.waypoints.front() == kStart);
    CHECK(prm.waypoints.back() == kGoal);
    CHECK(path_length(prm) <= 1.5 * straight);
  }
}

TEST_CASE("planners are deterministic per seed") {
  const auto arm = kin::default_arm();
  const Scene scene = load_scene_file(test::data_path("scenes/suite/02_sphere.json"));
  const auto& q = scene.queries.front();
  const Path a = plan_rrt(arm, q.start, q.goal, scene.obstacles, params(9));
  const Path b = plan_rrt(arm, q.start, q.goal, scene.obstacles, params(9));
  CHECK(a.waypoints == b.waypoints);
  const Path c = plan_prm(arm, q.start, q.goal, scene.obstacles, params(9));
  const Path d = plan_prm(arm, q.start, q.goal, scene.obstacles, params(9));
  CHECK(c.waypoints == d.waypoints);
}

TEST_CASE("aperture scene is solved reliably by both planners") {
  const auto arm = kin::default_arm();
  const Scene scene = load_scene_file(test::data_path("scenes/suite/03_aperture.json"));
  REQUIRE_FALSE(scene.queries.empty());
  for (const auto& q : scene.queries) {
    int rrt_ok = 0, prm_ok = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
      try {
        const Path p = plan_rrt(arm, q.start, q.goal, scene.obstacles, params(s));
        if (path_collision_free(arm, p, scene.obstacles, 0.0, 0.005)) ++rrt_ok;
      } catch (const Error&) {
      }
      try {
        const Path p = plan_prm(arm, q.start, q.goal, scene.obstacles, params(s));
        if (path_collision_free(arm, p, scene.obstacles, 0.0, 0.005)) ++prm_ok;
      } catch (const Error&) {
      }
    }
    CHECK(rrt_ok >= 90);
    CHECK(prm_ok >= 90);
  }
}

TEST_CASE("endpoints in collision or out of limits are rejected") {
  const auto arm = kin::default_arm();
  ObstacleSet obs;
  obs.spheres.push_back({kin::forward_kinematics(arm, kStart).position, 0.02});
  test::check_throws_code([&] { plan_rrt(arm, kStart, kGoal, obs, params(1)); }, ErrorCode::invalid_endpoint);
  test::check_throws_code([&] { plan_prm(arm, kGoal, kStart, obs, params(1)); }, ErrorCode::invalid_endpoint);
  JointVector wild = kGoal;
  wild[1] = 10.0;
  test::check_throws_code([&] { plan_rrt(arm, kStart, wild, {}, params(1)); }, ErrorCode::invalid_endpoint);
}

TEST_CASE("exhausted budget reports no path") {
  const auto arm = kin::default_arm();
  const Scene scene = load_scene_file(test::data_path("scenes/suite/03_aperture.json"));
  const auto& q = scene.queries.front();
  REQUIRE_FALSE(edge_collision_free(arm, q.start, q.goal, scene.obstacles, 0.005));
  PlannerParams p = params(1);
  p.max_iterations = 1;
  p.prm_samples = 1;
  p.prm_k = 1;
  test::check_throws_code([&] { plan_rrt(arm, q.start, q.goal, scene.obstacles, p); }, ErrorCode::no_path_found);
  test::check_throws_code([&] { plan_prm(arm, q.start, q.goal, scene.obstacles, p); }, ErrorCode::no_path_found);
}

TEST_CASE("shortcut keeps short paths and collapses zig-zags") {
  const auto arm = kin::default_arm();
  const Path two{{kStart, kGoal}};
  CHECK(shortcut_path(arm, two, {}, 50, 1).waypoints == two.waypoints);

  Path zig;
  for (int i = 0; i <= 8; ++i) {
    JointVector q = kin::lerp(kStart, kGoal, i / 8.0);
    q[3] += (i % 2 ? 0.3 : -0.3) * (i > 0 && i < 8);
    zig.waypoints.push_back(q);
  }
  const Path cut = shortcut_path(arm, zig, {}, 200, 3);
  CHECK(path_length(cut) < path_length(zig));
  CHECK(cut.waypoints.size() == 2);
  CHECK(cut.waypoints.front() == zig.waypoints.front());
  CHECK(cut.waypoints.back() == zig.waypoints.back());
}

TEST_CASE("shortcut respects obstacles") {
  const auto arm = kin::default_arm();
  const Scene scene = load_scene_file(test::data_path("scenes/suite/03_aperture.json"));
  const auto& q = scene.queries.front();
  const Path raw = plan_rrt(arm, q.start, q.goal, scene.obstacles, params(4));
  const Path cut = shortcut_path(arm, raw, scene.obstacles, 100, 4);
  CHECK(cut.waypoints.front() == q.start);
  CHECK(cut.waypoints.back() == q.goal);
  CHECK(path_length(cut) <= path_length(raw) + 1e-12);
  CHECK(path_collision_free(arm, cut, scene.obstacles, 0.0, 0.005));
}

TEST_CASE("trapezoidal timing") {
  auto arm = kin::default_arm();
  for (auto& j : arm.joints) {
    j.max_velocity = 1.0;
    j.max_acceleration = 2.0;
  }
  const JointVector a{{-1, 0, 0, 0, 0}}, b{{1, 0, 0, 0, 0}};
  const Trajectory t = time_parameterize(arm, Path{{a, b}});
  CHECK(t.duration() == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(t.evaluate(0.0).q == a);
  CHECK(t.evaluate(10.0).q == b);
  CHECK(kin::max_abs_difference(t.evaluate(1.25).q, JointVector{}) < 1e-12);

  CHECK(time_parameterize(arm, Path{{a}}).duration() == 0.0);

  double prev = 0.0;
  for (double d : {0.01, 0.1, 0.5, 1.0, 2.0}) {
    const double dur = time_parameterize(arm, Path{{JointVector{}, JointVector{{d, 0, 0, 0, 0}}}}).duration();
    CHECK(dur > prev);
    prev = dur;
  }
}

TEST_CASE("sampled velocities stay within limits") {
  const auto arm = kin::default_arm();
  const Path p{{kStart, kin::lerp(kStart, kGoal, 0.3), kGoal}};
  const Trajectory t = time_parameterize(arm, p);
  for (const auto& s : t.samples(0.005)) {
    for (std::size_t i = 0; i < kin::kDof; ++i) {
      REQUIRE(std::abs(s.qdot[i]) <= arm.joints[i].max_velocity * (1 + 1e-9));
    }
  }
  CHECK(t.samples(0.01).back().t == doctest::Approx(t.duration()));
}

TEST_CASE("scene files") {
  const auto suite = load_scene_suite(test::data_path("scenes/suite"));
  CHECK(suite.size() == 5);
  for (const auto& s : suite) CHECK_FALSE(s.queries.empty());
  test::check_throws_code([] { load_scene_file(test::temp_path("nope.json")); }, ErrorCode::io);
  const auto bad = test::write_temp("bad-scene.json",
      R"({"format": "twinarm-scene", "version": 1, "name": "x", "spheres": [{"center": [0,0,0], "radius": -1}]})");
  CHECK_THROWS_AS(load_scene_file(bad), Error);
}

}  // TEST_SUITE
