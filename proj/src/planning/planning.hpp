#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kinematics/types.hpp"

namespace twinarm::plan {

using kin::ArmModel;
using kin::JointVector;
using kin::Vec3;

struct Sphere {
  Vec3 center;
  double radius = 0.0;
};

// Axis-aligned.
struct Box {
  Vec3 min;
  Vec3 max;
};

struct ObstacleSet {
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;

  bool empty() const { return spheres.empty() && boxes.empty(); }
};

void validate(const ObstacleSet& obstacles);

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);
double point_box_distance(const Vec3& p, const Box& box);
double segment_box_distance(const Vec3& a, const Vec3& b, const Box& box);

// Each link is a capsule of arm.link_radius around the segment between
// consecutive frame origins. True iff every capsule keeps at least
// `clearance` from every obstacle surface.
bool collision_free(const ArmModel& arm, const JointVector& q,
                    const ObstacleSet& obstacles, double clearance);

struct Path {
  std::vector<JointVector> waypoints;
};

// Sum of joint-space L2 distances between consecutive waypoints.
double path_length(const Path& path);

// Checks the straight joint-space segment at no more than `spacing` radians
// per joint between samples, endpoints included.
bool edge_collision_free(const ArmModel& arm, const JointVector& a,
                         const JointVector& b, const ObstacleSet& obstacles,
                         double clearance, double spacing = 0.01);

bool path_collision_free(const ArmModel& arm, const Path& path,
                         const ObstacleSet& obstacles, double clearance,
                         double spacing = 0.01);

struct PlannerParams {
  double step_size = 0.1;  // rad, RRT extension length
  double goal_bias = 0.1;
  int max_iterations = 5000;
  int prm_samples = 500;
  int prm_k = 10;
  std::uint64_t rng_seed = 1;
  double clearance = 0.005;        // m
  double edge_resolution = 0.01;   // rad
};

void validate(const PlannerParams& params);

// Throws InvalidEndpoint if start/goal are out of limits or in collision and
// NoPathFound when the iteration budget runs out.
Path plan_rrt(const ArmModel& arm, const JointVector& start,
              const JointVector& goal, const ObstacleSet& obstacles,
              const PlannerParams& params);

// Lazy PRM: nodes are validated when sampled, edges only when a shortest
// path uses them.
Path plan_prm(const ArmModel& arm, const JointVector& start,
              const JointVector& goal, const ObstacleSet& obstacles,
              const PlannerParams& params);

Path shortcut_path(const ArmModel& arm, const Path& path,
                   const ObstacleSet& obstacles, int iterations,
                   std::uint64_t rng_seed, double clearance = 0.005);

struct TrajectorySample {
  double t = 0.0;
  JointVector q;
  JointVector qdot;
};

// Rest-to-rest trapezoidal motion between consecutive waypoints. All joints
// share one normalized profile per segment, so the motion stays on the
// straight joint-space segment.
class Trajectory {
 public:
  struct Segment {
    JointVector from;
    JointVector to;
    double t0 = 0.0;
    double duration = 0.0;
    double accel_time = 0.0;  // time spent accelerating (and decelerating)
    double peak_rate = 0.0;   // ds/dt at cruise, s in [0, 1]
    double accel = 0.0;       // d2s/dt2
  };

  Trajectory() = default;
  Trajectory(JointVector start, std::vector<Segment> segments);

  double duration() const;
  TrajectorySample evaluate(double t) const;
  // Uniform samples at `period`, plus the exact end point.
  std::vector<TrajectorySample> samples(double period) const;
  const std::vector<Segment>& segments() const { return segments_; }
  const JointVector& start() const { return start_; }
  const JointVector& end() const;

 private:
  JointVector start_;
  std::vector<Segment> segments_;
};

Trajectory time_parameterize(const ArmModel& arm, const Path& path);

struct PlanningQuery {
  JointVector start;
  JointVector goal;
};

struct Scene {
  std::string name;
  ObstacleSet obstacles;
  std::vector<PlanningQuery> queries;
};

// Scene file (JSON, "twinarm-scene" v1).
Scene load_scene_file(const std::filesystem::path& path);
// Every *.json scene in the directory, sorted by file name.
std::vector<Scene> load_scene_suite(const std::filesystem::path& dir);

}  // namespace twinarm::plan
