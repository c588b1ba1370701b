#include "harness/cell.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace twinarm::harness {

namespace {
// Joint speeds below this count as holding still for the power model.
constexpr double kMovingRate = 0.01;  // rad/s
constexpr int kRrtAttempts = 3;
}  // namespace

Action Action::move_to(const Pose& p, std::string label, std::optional<double> settle) {
  Action a;
  a.kind = Kind::move;
  a.pose = p;
  a.label = std::move(label);
  a.settle = settle;
  return a;
}

Action Action::joint_move(const JointVector& q, std::string label, std::optional<double> settle) {
  Action a;
  a.kind = Kind::joint_move;
  a.joints = q;
  a.label = std::move(label);
  a.settle = settle;
  return a;
}

Action Action::dwell(double s) {
  Action a;
  a.kind = Kind::dwell;
  a.seconds = s;
  return a;
}

Action Action::grasp(const emu::Vial& v) {
  Action a;
  a.kind = Kind::grasp;
  a.vial = v;
  return a;
}

Action Action::release() {
  Action a;
  a.kind = Kind::release;
  return a;
}

Action Action::dispense(const Pose& well, double volume_ml) {
  Action a;
  a.kind = Kind::dispense;
  a.pose = well;
  a.volume_ml = volume_ml;
  return a;
}

Cell::Cell(CellConfig cfg)
    : cfg_(std::move(cfg)),
      state_(emu::make_state(cfg_.arm, cfg_.home, cfg_.profile.servo, cfg_.tool)),
      link_(cfg_.channel, state_.q_measured,
            sync::SyncLink::Options{cfg_.publish_every, cfg_.v_cap,
                                    sync::kExtrapolationHorizon, cfg_.record_traces}),
      rng_(cfg_.seed),
      hold_(state_.q_commanded) {
  kin::validate(cfg_.arm);
  plan::validate(cfg_.obstacles);
  plan::validate(cfg_.planner);
  if (!(cfg_.tick > 0.0)) throw Error(ErrorCode::invalid_argument, "cell: tick must be > 0");
}

JointVector Cell::command() const { return active_ ? active_->end() : hold_; }

JointVector Cell::command_now() const {
  return active_ ? active_->evaluate(std::min(now() - active_start_, active_->duration())).q : hold_;
}

MotionPlan Cell::begin_move(const Pose& target, std::optional<double> settle) {
  const JointVector start = command_now();
  const kin::IkResult ik = kin::ik_solve_robust(cfg_.arm, target, start, cfg_.ik);
  if (ik.status == kin::IkStatus::unreachable) {
    throw Error(ErrorCode::unreachable, "target is outside the workspace");
  }
  if (!ik.ok()) {
    throw Error(ErrorCode::not_converged,
                "IK did not converge (residual " + std::to_string(ik.report.position_residual) + " m)");
  }
  MotionPlan mp = begin_joint_move(ik.q, settle);
  mp.ik = ik.report;
  return mp;
}

MotionPlan Cell::begin_joint_move(const JointVector& goal_in, std::optional<double> settle) {
  const auto t0 = std::chrono::steady_clock::now();
  MotionPlan mp;
  mp.goal = cfg_.arm.clamp(goal_in);
  const JointVector start = command_now();

  plan::PlannerParams params = cfg_.planner;
  params.rng_seed = cfg_.seed * 1000003ULL + (++moves_) * 16;
  // A few fresh RRT seeds, then the roadmap.
  for (int attempt = 0;; ++attempt) {
    try {
      mp.path = attempt < kRrtAttempts
          ? plan::plan_rrt(cfg_.arm, start, mp.goal, cfg_.obstacles, params)
          : plan::plan_prm(cfg_.arm, start, mp.goal, cfg_.obstacles, params);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_path_found || attempt == kRrtAttempts) throw;
      ++params.rng_seed;
    }
  }
  mp.path = plan::shortcut_path(cfg_.arm, mp.path, cfg_.obstacles,
                                cfg_.shortcut_iterations, params.rng_seed, params.clearance);
  mp.trajectory = plan::time_parameterize(cfg_.arm, mp.path);
  mp.plan_wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  plan_wall_times_.push_back(mp.plan_wall_s);

  active_ = mp.trajectory;
  active_start_ = now();
  hold_ = mp.goal;
  hold_until_ = now() + mp.trajectory.duration() + settle.value_or(cfg_.settle);
  return mp;
}

void Cell::enqueue(const Action& action) { queue_.push_back(action); }

void Cell::clear_queue() { queue_.clear(); }

void Cell::halt() {
  queue_.clear();
  if (active_) {
    hold_ = active_->evaluate(std::min(now() - active_start_, active_->duration())).q;
    active_.reset();
  }
  hold_until_ = now();
}

void Cell::set_tool(emu::Tool tool) {
  if (state_.grasped) throw Error(ErrorCode::invalid_argument, "tool change while holding an object");
  state_.tool = tool;
}

bool Cell::busy() const {
  return !queue_.empty() || active_.has_value() || now() < hold_until_ - 1e-9;
}

void Cell::fail(const Error& e) {
  last_error_ = e;
  queue_.clear();
}

void Cell::start_action(const Action& a) {
  using K = Action::Kind;
  switch (a.kind) {
    case K::move:
      begin_move(a.pose, a.settle);
      break;
    case K::joint_move:
      begin_joint_move(a.joints, a.settle);
      break;
    case K::dwell:
      hold_until_ = now() + a.seconds;
      break;
    case K::grasp: {
      const emu::GripperConfig& g = cfg_.profile.gripper;
      double tilt = g.seat_tilt_mean;
      if (g.seat_tilt_std > 0.0) tilt += std::normal_distribution<double>(0.0, g.seat_tilt_std)(rng_);
      state_ = emu::grasp(cfg_.arm, state_, a.vial, cfg_.profile.joint_offset,
                          g.max_payload, g.reach_tol, tilt);
      break;
    }
    case K::release:
      state_ = emu::release(state_);
      break;
    case K::dispense: {
      const Pose tip = physical_pose();
      DispenseResult r;
      r.alignment_error_m = std::hypot(tip.position.x - a.pose.position.x,
                                       tip.position.y - a.pose.position.y);
      r.volume_ml = emu::pipette_dispense(state_, a.volume_ml, r.alignment_error_m,
                                          cfg_.profile.pipette, rng_());
      last_dispense_ = r;
      break;
    }
  }
}

void Cell::tick() {
  // Instant actions (grasp, release, dispense) chain within one tick.
  while (!active_ && now() >= hold_until_ - 1e-9 && !queue_.empty()) {
    const Action a = queue_.front();
    queue_.pop_front();
    try {
      start_action(a);
    } catch (const Error& e) {
      fail(a.label.empty() ? e : Error(e.code(), a.label + ": " + e.what()));
    }
  }

  ++ticks_;
  const double t = now();
  JointVector cmd = hold_;
  if (active_) {
    const double local = t - active_start_;
    if (local >= active_->duration()) {
      cmd = active_->end();
      active_.reset();
    } else {
      cmd = active_->evaluate(local).q;
    }
  }

  state_ = emu::step(cfg_.arm, state_, cmd, cfg_.tick, cfg_.profile.servo, rng_);

  bool moving = false;
  for (double v : state_.velocity.q) moving = moving || std::abs(v) > kMovingRate;
  const double frac = std::clamp(state_.payload / cfg_.profile.gripper.max_payload, 0.0, 1.0);
  const emu::ElectricalLoad load = emu::electrical_load(state_, moving, frac, cfg_.profile.power);
  energy_.charge += load.current * cfg_.tick;
  energy_.energy += load.power * cfg_.tick;
  energy_.peak_current = std::max(energy_.peak_current, load.current);
  energy_.elapsed += cfg_.tick;

  link_.tick(t, state_.q_measured, state_.velocity);
}

bool Cell::run_until_idle(double max_seconds) {
  last_error_.reset();
  const double deadline = now() + max_seconds;
  while (busy() && now() < deadline) {
    tick();
    if (last_error_) {
      // Let the arm come to rest at the held command before reporting.
      while (active_ || now() < hold_until_ - 1e-9) tick();
      return false;
    }
  }
  if (busy()) {
    fail(Error(ErrorCode::internal, "cell did not go idle within the time budget"));
    return false;
  }
  return true;
}

void Cell::run_for(double seconds) {
  const std::uint64_t n = static_cast<std::uint64_t>(std::llround(seconds / cfg_.tick));
  for (std::uint64_t i = 0; i < n; ++i) tick();
}

Pose Cell::physical_pose() const {
  return emu::physical_tool_pose(cfg_.arm, state_, cfg_.profile.joint_offset);
}

Pose Cell::twin_pose() const { return kin::forward_kinematics(cfg_.arm, link_.twin().q_estimate); }

}  // namespace twinarm::harness
