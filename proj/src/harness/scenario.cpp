#include "harness/scenario.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>

#include "common/error.hpp"
#include "common/json_file.hpp"

namespace twinarm::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string task_name(Task task) {
  switch (task) {
    case Task::placement: return "placement";
    case Task::pipetting: return "pipetting";
    case Task::repeatability: return "repeatability";
    case Task::planning_benchmark: return "planning_benchmark";
  }
  return "unknown";
}

Task parse_task(const std::string& name) {
  for (Task t : {Task::placement, Task::pipetting, Task::repeatability, Task::planning_benchmark}) {
    if (task_name(t) == name) return t;
  }
  throw Error(ErrorCode::scenario, "unknown task '" + name + "'");
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.cycles < 1) throw Error(ErrorCode::scenario, "cycles must be >= 1");
  if (cfg.task == Task::planning_benchmark) {
    if (cfg.scenes.empty()) throw Error(ErrorCode::scenario, "planning benchmark needs scenes");
    if (cfg.seeds < 1) throw Error(ErrorCode::scenario, "seeds must be >= 1");
  }
  const Layout& l = cfg.layout;
  if (cfg.task == Task::pipetting && l.wells.empty()) {
    throw Error(ErrorCode::scenario, "pipetting needs at least one well");
  }
  if ((cfg.task == Task::placement || cfg.task == Task::repeatability) &&
      (l.sources.empty() || l.targets.empty())) {
    throw Error(ErrorCode::scenario, "pick-and-place needs sources and targets");
  }
  if (!(cfg.tick > 0.0) || cfg.publish_every < 1 || !(cfg.settle >= 0.0)) {
    throw Error(ErrorCode::scenario, "tick, publish_every and settle must be positive");
  }
}

namespace {

Vec3 vec3_of(const json& a) {
  const auto v = a.get<std::vector<double>>();
  if (v.size() != 3) throw Error(ErrorCode::scenario, "points need 3 coordinates");
  return {v[0], v[1], v[2]};
}

std::vector<Vec3> points(const json& j, const char* key, std::vector<Vec3> fallback) {
  if (!j.contains(key)) return fallback;
  std::vector<Vec3> out;
  for (const json& p : j.at(key)) out.push_back(vec3_of(p));
  return out;
}

fs::path resolve(const fs::path& base, const std::string& rel) {
  fs::path p(rel);
  if (p.is_relative()) p = base / p;
  std::error_code ec;
  if (!fs::exists(p, ec)) throw Error(ErrorCode::io, "referenced file not found: " + p.string());
  return p;
}

Layout layout_from(const json& j, const fs::path& base) {
  Layout l;
  if (j.contains("ready")) {
    const json& r = j.at("ready");
    l.ready = {vec3_of(r.at("position")), json_get<double>(r, "pitch"),
               json_get_or<double>(r, "roll", 0.0)};
  }
  l.sources = points(j, "sources", l.sources);
  l.targets = points(j, "targets", l.targets);
  l.wells = points(j, "wells", l.wells);
  if (j.contains("well_offset")) l.well_offset = vec3_of(j.at("well_offset"));
  l.tool_pitch = json_get_or<double>(j, "tool_pitch", l.tool_pitch);
  l.approach_height = json_get_or<double>(j, "approach_height", l.approach_height);
  l.dispense_height = json_get_or<double>(j, "dispense_height", l.dispense_height);
  l.vial_mass = json_get_or<double>(j, "vial_mass", l.vial_mass);
  l.volume_ml = json_get_or<double>(j, "volume_ml", l.volume_ml);
  l.grasp_dwell = json_get_or<double>(j, "grasp_dwell_s", l.grasp_dwell);
  l.release_dwell = json_get_or<double>(j, "release_dwell_s", l.release_dwell);
  l.dispense_dwell = json_get_or<double>(j, "dispense_dwell_s", l.dispense_dwell);
  if (j.contains("scene")) {
    l.obstacles = plan::load_scene_file(resolve(base, json_get<std::string>(j, "scene"))).obstacles;
  }
  return l;
}

}  // namespace

ScenarioConfig load_scenario(const fs::path& path) {
  const json j = read_json_file(path, "twinarm-scenario", 1);
  const fs::path base = path.parent_path();
  ScenarioConfig cfg;
  try {
    cfg.task = parse_task(json_get<std::string>(j, "task"));
    cfg.cycles = json_get_or<int>(j, "cycles", cfg.cycles);
    cfg.rng_seed = json_get_or<std::uint64_t>(j, "rng_seed", cfg.rng_seed);
    cfg.noise_free = json_get_or<bool>(j, "noise_free", false);
    if (j.contains("arm")) cfg.arm = kin::load_arm_file(resolve(base, json_get<std::string>(j, "arm")));
    cfg.profile = emu::load_emulator_profile(resolve(base, json_get<std::string>(j, "profile")));
    cfg.channel = sync::load_channel_file(resolve(base, json_get<std::string>(j, "channel")));
    if (j.contains("layout")) cfg.layout = layout_from(j.at("layout"), base);
    if (j.contains("scenes")) {
      fs::path dir(json_get<std::string>(j, "scenes"));
      if (dir.is_relative()) dir = base / dir;
      cfg.scenes = plan::load_scene_suite(dir);
    }
    cfg.seeds = json_get_or<int>(j, "seeds", cfg.seeds);
    if (j.contains("band_mm")) cfg.band_mm = json_get<double>(j, "band_mm");
    cfg.tick = json_get_or<double>(j, "tick_s", cfg.tick);
    cfg.publish_every = json_get_or<int>(j, "publish_every", cfg.publish_every);
    cfg.settle = json_get_or<double>(j, "settle_s", cfg.settle);
    if (j.contains("planner")) {
      const json& p = j.at("planner");
      cfg.planner.step_size = json_get_or<double>(p, "step_size", cfg.planner.step_size);
      cfg.planner.goal_bias = json_get_or<double>(p, "goal_bias", cfg.planner.goal_bias);
      cfg.planner.max_iterations = json_get_or<int>(p, "max_iterations", cfg.planner.max_iterations);
      cfg.planner.prm_samples = json_get_or<int>(p, "prm_samples", cfg.planner.prm_samples);
      cfg.planner.prm_k = json_get_or<int>(p, "prm_k", cfg.planner.prm_k);
      cfg.planner.clearance = json_get_or<double>(p, "clearance", cfg.planner.clearance);
    }
    if (j.contains("output")) {
      fs::path out(json_get<std::string>(j, "output"));
      cfg.output = out.is_relative() ? base / out : out;
    }
    cfg.output_format = parse_report_format(json_get_or<std::string>(j, "report_format", "json"));
    validate(cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    throw Error(ErrorCode::scenario, path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::scenario, path.string() + ": " + e.what());
  }
  return cfg;
}

CellConfig make_cell_config(const ScenarioConfig& cfg, emu::Tool tool) {
  CellConfig c;
  c.arm = cfg.arm;
  c.profile = cfg.noise_free ? emu::without_errors(cfg.profile) : cfg.profile;
  c.channel = cfg.channel;
  c.channel.rng_seed = cfg.channel.rng_seed * 7919ULL + cfg.rng_seed;
  c.obstacles = cfg.layout.obstacles;
  c.planner = cfg.planner;
  c.ik.tol_pos = 1e-7;
  c.ik.tol_ang = 1e-6;
  c.tool = tool;
  c.tick = cfg.tick;
  c.publish_every = cfg.publish_every;
  c.settle = cfg.settle;
  c.seed = cfg.rng_seed;
  const kin::IkResult ready = kin::ik_solve_robust(cfg.arm, cfg.layout.ready, JointVector{}, c.ik);
  if (!ready.ok()) throw Error(ErrorCode::scenario, "ready pose is not reachable");
  c.home = ready.q;
  return c;
}

namespace {

Pose down_at(const Layout& l, const Vec3& p) { return {p, l.tool_pitch, 0.0}; }

Vec3 above(const Layout& l, const Vec3& p) { return p + Vec3{0.0, 0.0, l.approach_height}; }

}  // namespace

std::vector<Action> pick_place_cycle(const Layout& l, const Vec3& source, const Vec3& target,
                                     const std::string& vial_id) {
  return {
      Action::move_to(down_at(l, above(l, source)), "pre_grasp", 0.0),
      Action::move_to(down_at(l, source), "grasp_pose"),
      Action::grasp(emu::Vial{vial_id, l.vial_mass, source}),
      Action::dwell(l.grasp_dwell),
      Action::move_to(down_at(l, above(l, source)), "lift", 0.0),
      Action::move_to(down_at(l, above(l, target)), "pre_place", 0.0),
      Action::move_to(down_at(l, target), "place"),
      Action::release(),
      Action::dwell(l.release_dwell),
      Action::move_to(down_at(l, above(l, target)), "retreat", 0.0),
      Action::move_to(l.ready, "ready", 0.0),
  };
}

std::vector<Action> pipette_cycle(const Layout& l, const Vec3& well) {
  const Vec3 w = well + l.well_offset;
  const Vec3 tip = w + Vec3{0.0, 0.0, l.dispense_height};
  return {
      Action::move_to(down_at(l, above(l, w)), "pre_dispense", 0.0),
      Action::move_to(down_at(l, tip), "dispense_pose"),
      Action::dispense(down_at(l, w), l.volume_ml),
      Action::dwell(l.dispense_dwell),
      Action::move_to(down_at(l, above(l, w)), "retreat", 0.0),
      Action::move_to(l.ready, "ready", 0.0),
  };
}

namespace {

std::string failure_text(const Error& e) {
  return std::string(error_code_name(e.code())) + ": " + e.what();
}

struct HostClock {
  std::chrono::steady_clock::time_point wall = std::chrono::steady_clock::now();
  std::clock_t cpu = std::clock();

  HostInfo finish() const {
    HostInfo h;
    h.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall).count();
    h.cpu_time_s = static_cast<double>(std::clock() - cpu) / CLOCKS_PER_SEC;
    rusage ru{};
    if (getrusage(RUSAGE_SELF, &ru) == 0) h.peak_rss_mb = static_cast<double>(ru.ru_maxrss) / 1024.0;
    return h;
  }
};

TrialReport report_header(const ScenarioConfig& cfg) {
  TrialReport r;
  r.task = task_name(cfg.task);
  r.profile = cfg.profile.label;
  r.channel = cfg.channel.name;
  r.arm = cfg.arm.name;
  r.cycles = cfg.cycles;
  r.rng_seed = cfg.rng_seed;
  r.noise_free = cfg.noise_free;
  r.band_mm = cfg.band_mm;
  return r;
}

void finish_cell_report(TrialReport& r, const Cell& cell) {
  const emu::PowerProfile& pp = cell.config().profile.power;
  const EnergyMeter& m = cell.energy();
  EnergySummary e;
  e.mean_current_a = m.mean_current();
  e.peak_current_a = m.peak_current;
  e.mean_power_w = m.mean_power();
  e.energy_j = m.energy;
  const emu::ElectricalLoad idle = emu::electrical_load(cell.state(), false, 0.0, pp);
  const emu::ElectricalLoad full = emu::electrical_load(cell.state(), true, 1.0, pp);
  e.idle_current_a = idle.current;
  e.full_load_current_a = full.current;
  e.full_load_power_w = full.power;
  r.energy = e;

  const sync::SyncLink& link = cell.link();
  SyncSummary s;
  s.sent = link.channel().stats().sent;
  s.delivered = link.channel().stats().delivered;
  s.dropped = link.channel().stats().dropped;
  s.duplicated = link.channel().stats().duplicated;
  s.gaps = link.gaps();
  s.decode_errors = link.decode_errors();
  s.mean_latency_s = link.mean_latency();
  s.max_latency_s = link.max_latency();
  if (!link.physical_trace().empty()) {
    const sync::DriftReport d = sync::drift_report(link.physical_trace(), link.twin_trace());
    s.max_drift_rad = d.max_drift;
    s.mean_drift_rad = d.mean_drift;
  }
  r.sync = s;
  r.sim_time_s = cell.now();
}

// Runs the script action by action; `on_done` sees each completed action.
template <typename F>
std::optional<Error> run_script(Cell& cell, const std::vector<Action>& script, F on_done) {
  for (const Action& a : script) {
    cell.enqueue(a);
    if (!cell.run_until_idle()) return *cell.last_error();
    on_done(a);
  }
  return std::nullopt;
}

// Brings the cell back to a clean ready state after a failed cycle.
void recover(Cell& cell, const Layout& l) {
  cell.enqueue(Action::release());
  cell.enqueue(Action::move_to(l.ready, "recover"));
  cell.run_until_idle();
}

// Fills deviation_mm from the placement error vectors of measured cycles.
void fill_deviation(std::vector<CycleRecord>& records) {
  std::vector<Vec3> errs;
  for (const CycleRecord& r : records) {
    if (r.achieved && r.target && r.position_error_mm) {
      errs.push_back(r.achieved->position - r.target->position);
    }
  }
  if (errs.empty()) return;
  Vec3 mean;
  for (const Vec3& e : errs) mean = mean + e;
  mean = (1.0 / static_cast<double>(errs.size())) * mean;
  for (CycleRecord& r : records) {
    if (r.achieved && r.target && r.position_error_mm) {
      r.deviation_mm = ((r.achieved->position - r.target->position) - mean).norm() * 1000.0;
    }
  }
}

TrialReport run_pick_place(const ScenarioConfig& cfg, bool fixed_site) {
  validate(cfg);
  const HostClock clock;
  Cell cell(make_cell_config(cfg, emu::Tool::gripper));
  const Layout& l = cfg.layout;
  TrialReport report = report_header(cfg);

  for (int i = 0; i < cfg.cycles; ++i) {
    const std::size_t k = fixed_site ? 0 : static_cast<std::size_t>(i);
    const Vec3 source = l.sources[k % l.sources.size()];
    const Vec3 target = l.targets[k % l.targets.size()];
    CycleRecord rec;
    rec.cycle = i;
    rec.target = down_at(l, target);
    const double t0 = cell.now();

    auto measure = [&](const Action& a) {
      if (a.label != "place") return;
      const Pose p = cell.physical_pose();
      const double tilt = cell.state().grasped ? cell.state().grasped->seat_tilt : 0.0;
      rec.achieved = p;
      rec.position_error_mm = (p.position - target).norm() * 1000.0;
      rec.angular_error_deg = std::abs(deg(normalize_angle(p.pitch + tilt - l.tool_pitch)));
    };
    const auto err = run_script(cell, pick_place_cycle(l, source, target, "vial-" + std::to_string(i)), measure);
    if (err) {
      rec.success = false;
      rec.failure = failure_text(*err);
      rec.achieved.reset();
      rec.position_error_mm.reset();
      rec.angular_error_deg.reset();
      recover(cell, l);
    } else {
      rec.success = true;
    }
    rec.cycle_time_s = cell.now() - t0;
    report.records.push_back(std::move(rec));
  }

  fill_deviation(report.records);
  report.aggregates = compute_aggregates(report.records, report.band_mm);
  finish_cell_report(report, cell);
  report.host = clock.finish();
  return report;
}

}  // namespace

TrialReport run_placement_trial(const ScenarioConfig& cfg) {
  if (cfg.task != Task::placement) throw Error(ErrorCode::scenario, "task is not placement");
  return run_pick_place(cfg, false);
}

TrialReport run_repeatability(const ScenarioConfig& cfg) {
  if (cfg.task != Task::repeatability) throw Error(ErrorCode::scenario, "task is not repeatability");
  return run_pick_place(cfg, true);
}

TrialReport run_pipetting_trial(const ScenarioConfig& cfg) {
  if (cfg.task != Task::pipetting) throw Error(ErrorCode::scenario, "task is not pipetting");
  validate(cfg);
  const HostClock clock;
  Cell cell(make_cell_config(cfg, emu::Tool::pipette));
  const Layout& l = cfg.layout;
  const double band = cell.config().profile.pipette.acceptance_band;
  TrialReport report = report_header(cfg);

  for (int i = 0; i < cfg.cycles; ++i) {
    const Vec3 well = l.wells[static_cast<std::size_t>(i) % l.wells.size()];
    CycleRecord rec;
    rec.cycle = i;
    rec.target = down_at(l, well + l.well_offset);
    const double t0 = cell.now();

    auto measure = [&](const Action& a) {
      if (a.kind != Action::Kind::dispense) return;
      const DispenseResult& d = *cell.last_dispense();
      rec.achieved = cell.physical_pose();
      rec.alignment_error_mm = d.alignment_error_m * 1000.0;
      rec.volume_ml = d.volume_ml;
      rec.volume_error_ml = d.volume_ml - a.volume_ml;
    };
    const auto err = run_script(cell, pipette_cycle(l, well), measure);
    if (err) {
      rec.success = false;
      rec.failure = failure_text(*err);
      recover(cell, l);
    } else if (std::abs(*rec.volume_error_ml) > band) {
      rec.success = false;
      rec.failure = "OutOfBand: volume deviation exceeds the acceptance band";
    } else {
      rec.success = true;
    }
    rec.cycle_time_s = cell.now() - t0;
    report.records.push_back(std::move(rec));
  }

  report.aggregates = compute_aggregates(report.records, report.band_mm);
  finish_cell_report(report, cell);
  report.host = clock.finish();
  return report;
}

TrialReport run_planning_benchmark(const ScenarioConfig& cfg) {
  if (cfg.task != Task::planning_benchmark) {
    throw Error(ErrorCode::scenario, "task is not planning_benchmark");
  }
  validate(cfg);
  const HostClock clock;
  TrialReport report = report_header(cfg);
  // Validation is denser than the planner's own edge checks and looks for
  // contact; the planning clearance covers the gaps between edge samples.
  constexpr double kValidationSpacing = 0.005;

  struct Acc {
    std::vector<double> times, exec, len;
    int attempts = 0, ok = 0;
  };
  Acc acc[2];
  const char* names[2] = {"rrt", "prm"};

  int index = 0;
  for (const plan::Scene& scene : cfg.scenes) {
    for (std::size_t qi = 0; qi < scene.queries.size(); ++qi) {
      const plan::PlanningQuery& q = scene.queries[qi];
      for (int p = 0; p < 2; ++p) {
        for (int s = 1; s <= cfg.seeds; ++s) {
          CycleRecord rec;
          rec.cycle = index++;
          rec.scene = scene.name;
          rec.planner = names[p];
          rec.query = static_cast<int>(qi);
          rec.seed = static_cast<std::uint64_t>(s) + cfg.rng_seed * 100000ULL;
          plan::PlannerParams params = cfg.planner;
          params.rng_seed = *rec.seed;
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const plan::Path path = p == 0
                ? plan::plan_rrt(cfg.arm, q.start, q.goal, scene.obstacles, params)
                : plan::plan_prm(cfg.arm, q.start, q.goal, scene.obstacles, params);
            rec.plan_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!plan::path_collision_free(cfg.arm, path, scene.obstacles, 0.0,
                                           kValidationSpacing)) {
              throw Error(ErrorCode::internal, "returned path failed dense collision validation");
            }
            const plan::Path smooth = plan::shortcut_path(cfg.arm, path, scene.obstacles, 60,
                                                          params.rng_seed, params.clearance);
            rec.path_length_rad = plan::path_length(smooth);
            rec.execution_s = plan::time_parameterize(cfg.arm, smooth).duration();
            rec.success = true;
          } catch (const Error& e) {
            if (!rec.plan_time_s) {
              rec.plan_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
            rec.success = false;
            rec.failure = failure_text(e);
          }
          Acc& a = acc[p];
          ++a.attempts;
          a.times.push_back(*rec.plan_time_s);
          if (rec.success) {
            ++a.ok;
            a.exec.push_back(*rec.execution_s);
            a.len.push_back(*rec.path_length_rad);
          }
          report.records.push_back(std::move(rec));
        }
      }
    }
  }
  report.cycles = static_cast<int>(report.records.size());
  report.aggregates = compute_aggregates(report.records, report.band_mm);
  for (int p = 0; p < 2; ++p) {
    Acc& a = acc[p];
    PlannerStats st;
    st.planner = names[p];
    st.attempts = a.attempts;
    st.successes = a.ok;
    st.success_rate = a.attempts ? static_cast<double>(a.ok) / a.attempts : 0.0;
    st.mean_plan_time_s = summarize(a.times).mean;
    if (!a.times.empty()) {
      std::vector<double> sorted = a.times;
      std::sort(sorted.begin(), sorted.end());
      const auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size()))) - 1;
      st.p95_plan_time_s = sorted[std::min(k, sorted.size() - 1)];
    }
    st.mean_execution_s = summarize(a.exec).mean;
    st.mean_path_length_rad = summarize(a.len).mean;
    report.planners.push_back(st);
  }
  report.host = clock.finish();
  return report;
}

TrialReport run_scenario(const ScenarioConfig& cfg) {
  switch (cfg.task) {
    case Task::placement: return run_placement_trial(cfg);
    case Task::pipetting: return run_pipetting_trial(cfg);
    case Task::repeatability: return run_repeatability(cfg);
    case Task::planning_benchmark: return run_planning_benchmark(cfg);
  }
  throw Error(ErrorCode::scenario, "unknown task");
}

}  // namespace twinarm::harness
