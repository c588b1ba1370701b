#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "common/angles.hpp"
#include "emulator/emulator.hpp"
#include "harness/cell.hpp"
#include "harness/report.hpp"
#include "kinematics/kinematics.hpp"
#include "planning/planning.hpp"
#include "sync/sync.hpp"

namespace twinarm::harness {

using kin::Vec3;

enum class Task { placement, pipetting, repeatability, planning_benchmark };

std::string task_name(Task task);
Task parse_task(const std::string& name);

// Bench geometry and timing shared by the scripted tasks. Positions in m.
struct Layout {
  Pose ready{{0.22, 0.0, 0.14}, -kPi / 2, 0.0};
  std::vector<Vec3> sources{{0.18, 0.10, 0.03}, {0.22, 0.10, 0.03},
                            {0.18, 0.14, 0.03}, {0.22, 0.14, 0.03}};
  std::vector<Vec3> targets{{0.18, -0.10, 0.03}, {0.22, -0.10, 0.03},
                            {0.18, -0.14, 0.03}, {0.22, -0.14, 0.03}};
  std::vector<Vec3> wells{{0.20, 0.06, 0.02}, {0.22, 0.06, 0.02}, {0.24, 0.06, 0.02},
                          {0.20, 0.09, 0.02}, {0.22, 0.09, 0.02}, {0.24, 0.09, 0.02}};
  Vec3 well_offset;               // static correction added to every well
  double tool_pitch = -kPi / 2;  // tool pointing down
  double approach_height = 0.07;
  double dispense_height = 0.005;  // tip above the well reference point
  double vial_mass = 0.010;        // kg
  double volume_ml = 1.0;
  double grasp_dwell = 0.15;       // s
  double release_dwell = 0.15;
  double dispense_dwell = 0.5;
  plan::ObstacleSet obstacles;
};

struct ScenarioConfig {
  Task task = Task::placement;
  int cycles = 20;
  std::uint64_t rng_seed = 1;
  bool noise_free = false;

  kin::ArmModel arm = kin::default_arm();
  emu::EmulatorProfile profile;
  sync::ChannelModel channel;
  Layout layout;
  plan::PlannerParams planner;

  std::vector<plan::Scene> scenes;  // planning benchmark
  int seeds = 100;                  // planning benchmark, per scene query
  std::optional<double> band_mm;    // repeatability band

  double tick = 0.01;
  int publish_every = 5;
  double settle = 0.45;

  std::filesystem::path output;
  ReportFormat output_format = ReportFormat::json;
};

void validate(const ScenarioConfig& cfg);

// Scenario file (JSON, "twinarm-scenario" v1). Paths resolve against the
// file's directory. Throws ScenarioError for bad content, IoError for
// missing referenced files.
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Cell wired up for a scenario (profile errors removed when noise_free).
CellConfig make_cell_config(const ScenarioConfig& cfg, emu::Tool tool);

// Action script for one pick-and-place cycle; the "place" move is where
// placement is measured.
std::vector<Action> pick_place_cycle(const Layout& layout, const Vec3& source,
                                     const Vec3& target, const std::string& vial_id);
// The "dispense" action is where volume and alignment are measured.
std::vector<Action> pipette_cycle(const Layout& layout, const Vec3& well);

TrialReport run_placement_trial(const ScenarioConfig& cfg);
TrialReport run_pipetting_trial(const ScenarioConfig& cfg);
TrialReport run_repeatability(const ScenarioConfig& cfg);
TrialReport run_planning_benchmark(const ScenarioConfig& cfg);
TrialReport run_scenario(const ScenarioConfig& cfg);

}  // namespace twinarm::harness
