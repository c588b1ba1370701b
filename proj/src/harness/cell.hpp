#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "common/error.hpp"
#include "emulator/emulator.hpp"
#include "kinematics/kinematics.hpp"
#include "planning/planning.hpp"
#include "sync/sync.hpp"

namespace twinarm::harness {

using kin::JointVector;
using kin::Pose;

struct CellConfig {
  kin::ArmModel arm = kin::default_arm();
  emu::EmulatorProfile profile;
  sync::ChannelModel channel;
  plan::ObstacleSet obstacles;
  plan::PlannerParams planner;
  kin::IkOptions ik;
  emu::Tool tool = emu::Tool::gripper;
  JointVector home;
  double tick = 0.01;          // s, 100 Hz
  int publish_every = 5;       // 20 Hz joint-state stream
  double v_cap = 1.5;          // rad/s, twin extrapolation cap
  double settle = 0.45;        // s of hold after a precise move
  int shortcut_iterations = 60;
  std::uint64_t seed = 1;
  bool record_traces = true;
};

// One step of a scripted task.
struct Action {
  enum class Kind { move, joint_move, dwell, grasp, release, dispense };

  Kind kind = Kind::dwell;
  Pose pose;               // move target; dispense well centre
  JointVector joints;      // joint_move target
  double seconds = 0.0;    // dwell
  std::optional<double> settle;  // move hold time; config default when empty
  emu::Vial vial;          // grasp
  double volume_ml = 0.0;  // dispense
  std::string label;

  static Action move_to(const Pose& p, std::string label = {},
                        std::optional<double> settle = std::nullopt);
  static Action joint_move(const JointVector& q, std::string label = {},
                           std::optional<double> settle = std::nullopt);
  static Action dwell(double s);
  static Action grasp(const emu::Vial& v);
  static Action release();
  static Action dispense(const Pose& well, double volume_ml);
};

struct MotionPlan {
  JointVector goal;
  kin::IterationReport ik;
  plan::Path path;
  plan::Trajectory trajectory;
  double plan_wall_s = 0.0;
};

struct DispenseResult {
  double alignment_error_m = 0.0;
  double volume_ml = 0.0;
};

struct EnergyMeter {
  double charge = 0.0;      // A*s
  double energy = 0.0;      // J
  double peak_current = 0.0;
  double elapsed = 0.0;     // s

  double mean_current() const { return elapsed > 0 ? charge / elapsed : 0.0; }
  double mean_power() const { return elapsed > 0 ? energy / elapsed : 0.0; }
};

// Simulated workcell: emulated arm, joint-state link, twin and the motion
// executor. Single owner; advance it with tick().
class Cell {
 public:
  explicit Cell(CellConfig cfg);

  // Solves IK from the current command, plans, shortcuts and starts the
  // trajectory, replacing any motion in progress. Throws twinarm::Error on
  // failure and leaves the current motion untouched.
  MotionPlan begin_move(const Pose& target, std::optional<double> settle = std::nullopt);
  // Joint-space move to an explicit configuration (clamped to limits).
  MotionPlan begin_joint_move(const JointVector& goal,
                              std::optional<double> settle = std::nullopt);

  void enqueue(const Action& action);
  void clear_queue();
  // Drops the queue and freezes the command where the trajectory is now.
  void halt();
  // Tool change; refused while the gripper holds something.
  void set_tool(emu::Tool tool);
  bool busy() const;

  void tick();
  // Ticks until the queue drains and motion settles. Returns false if an
  // action failed (see last_error()), leaving the rest of the queue dropped.
  bool run_until_idle(double max_seconds = 600.0);
  void run_for(double seconds);

  double now() const { return static_cast<double>(ticks_) * cfg_.tick; }
  std::uint64_t ticks() const { return ticks_; }
  const CellConfig& config() const { return cfg_; }
  const emu::ArmState& state() const { return state_; }
  const sync::SyncLink& link() const { return link_; }
  const EnergyMeter& energy() const { return energy_; }
  const std::optional<Error>& last_error() const { return last_error_; }
  void clear_error() { last_error_.reset(); }
  const std::optional<DispenseResult>& last_dispense() const { return last_dispense_; }
  const std::vector<double>& plan_wall_times() const { return plan_wall_times_; }
  // Final commanded configuration (end of the active trajectory).
  JointVector command() const;
  // Where the command is at the current instant.
  JointVector command_now() const;

  Pose physical_pose() const;
  Pose twin_pose() const;

 private:
  void start_action(const Action& a);
  void fail(const Error& e);

  CellConfig cfg_;
  emu::ArmState state_;
  sync::SyncLink link_;
  emu::Rng rng_;
  std::uint64_t ticks_ = 0;
  std::uint64_t moves_ = 0;

  std::optional<plan::Trajectory> active_;
  double active_start_ = 0.0;
  double hold_until_ = 0.0;
  JointVector hold_;
  std::deque<Action> queue_;

  EnergyMeter energy_;
  std::optional<Error> last_error_;
  std::optional<DispenseResult> last_dispense_;
  std::vector<double> plan_wall_times_;
};

}  // namespace twinarm::harness
