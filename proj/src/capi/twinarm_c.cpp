#include "twinarm/twinarm.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "common/error.hpp"
#include "harness/report.hpp"
#include "harness/scenario.hpp"
#include "harness/server.hpp"
#include "kinematics/kinematics.hpp"
#include "planning/planning.hpp"
#include "sync/sync.hpp"

struct twa_arm {
  twinarm::kin::ArmModel model;
};

struct twa_report {
  twinarm::harness::TrialReport report;
};

struct twa_server {
  std::unique_ptr<twinarm::harness::TeleopServer> server;
};

namespace {

using namespace twinarm;

thread_local std::string g_last_error;

static_assert(TWA_WIRE_SIZE == sync::kWireSize);
static_assert(TWA_DOF == kin::kDof);
static_assert(TWA_E_INTERNAL == static_cast<int>(ErrorCode::internal));

template <class F>
twa_status guard(F&& f) noexcept {
  try {
    f();
    return TWA_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<twa_status>(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return TWA_E_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TWA_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return TWA_E_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

kin::JointVector joints_of(const double* q) {
  kin::JointVector v;
  for (std::size_t i = 0; i < kin::kDof; ++i) v[i] = q[i];
  return v;
}

std::string format_text(const harness::TrialReport& r, const char* format, int deterministic) {
  const auto fmt = harness::parse_report_format(format ? format : "json");
  const harness::TrialReport out = deterministic ? harness::without_wall_clock(r) : r;
  return fmt == harness::ReportFormat::csv ? harness::report_csv_text(out)
                                           : harness::report_json_text(out);
}

}  // namespace

extern "C" {

const char* twa_version(void) { return "1.0.0"; }

const char* twa_status_name(twa_status status) {
  if (status == TWA_OK) return "Ok";
  if (status < TWA_E_INVALID_ARGUMENT || status > TWA_E_INTERNAL) return "Unknown";
  // Names are string literals, so the view is NUL-terminated.
  return error_code_name(static_cast<ErrorCode>(status)).data();
}

const char* twa_last_error(void) { return g_last_error.c_str(); }

void twa_string_free(char* s) { std::free(s); }

twa_status twa_arm_default(twa_arm** out) {
  return guard([&] {
    require(out, "out is null");
    *out = new twa_arm{kin::default_arm()};
  });
}

twa_status twa_arm_load(const char* path, twa_arm** out) {
  return guard([&] {
    require(path && out, "path or out is null");
    *out = new twa_arm{kin::load_arm_file(path)};
  });
}

void twa_arm_free(twa_arm* arm) { delete arm; }

twa_status twa_arm_describe(const twa_arm* arm, char** json_out) {
  return guard([&] {
    require(arm && json_out, "arm or json_out is null");
    *json_out = dup_string(kin::arm_json_text(arm->model));
  });
}

twa_status twa_fk(const twa_arm* arm, const double q[TWA_DOF], twa_pose* out) {
  return guard([&] {
    require(arm && q && out, "null argument");
    const kin::Pose p = kin::forward_kinematics(arm->model, joints_of(q));
    *out = {p.position.x, p.position.y, p.position.z, p.pitch, p.roll};
  });
}

twa_status twa_planar_ik(double x, double y, double l1, double l2, int elbow_up,
                         double* theta1, double* theta2) {
  return guard([&] {
    require(theta1 && theta2, "null output");
    const kin::PlanarSolution s = kin::planar_ik(
        {x, y, l1, l2, elbow_up ? kin::ElbowBranch::elbow_up : kin::ElbowBranch::elbow_down});
    *theta1 = s.theta1;
    *theta2 = s.theta2;
  });
}

twa_status twa_ik_solve(const twa_arm* arm, const twa_pose* target, const double seed[TWA_DOF],
                        double q_out[TWA_DOF], twa_ik_report* report) {
  return guard([&] {
    require(arm && target && q_out, "null argument");
    const kin::Pose goal{{target->x, target->y, target->z}, target->pitch, target->roll};
    const kin::JointVector start = seed ? joints_of(seed) : kin::JointVector{};
    const kin::IkResult r = kin::ik_solve_robust(arm->model, goal, start);
    for (std::size_t i = 0; i < kin::kDof; ++i) q_out[i] = r.q[i];
    if (report) {
      *report = {r.report.iterations, r.report.position_residual, r.report.angular_residual};
    }
    if (r.status == kin::IkStatus::unreachable) {
      throw Error(ErrorCode::unreachable, "target outside the workspace");
    }
    if (r.status == kin::IkStatus::not_converged) {
      throw Error(ErrorCode::not_converged, "ik did not converge");
    }
  });
}

twa_status twa_jacobian(const twa_arm* arm, const double q[TWA_DOF], double out[TWA_DOF * TWA_DOF]) {
  return guard([&] {
    require(arm && q && out, "null argument");
    const kin::Jacobian j = kin::jacobian(arm->model, joints_of(q));
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) out[r * 5 + c] = j(r, c);
    }
  });
}

twa_status twa_wire_encode(const twa_joint_state* msg, uint8_t out[TWA_WIRE_SIZE]) {
  return guard([&] {
    require(msg && out, "null argument");
    const sync::Bytes b = sync::encode({msg->seq, msg->timestamp, joints_of(msg->q), joints_of(msg->qdot)});
    std::memcpy(out, b.data(), b.size());
  });
}

twa_status twa_wire_decode(const uint8_t* bytes, size_t len, twa_joint_state* out) {
  return guard([&] {
    require(bytes || len == 0, "bytes is null");
    require(out, "out is null");
    const sync::JointStateMsg m = sync::decode({bytes, len});
    out->seq = m.seq;
    out->timestamp = m.timestamp;
    for (std::size_t i = 0; i < kin::kDof; ++i) {
      out->q[i] = m.q[i];
      out->qdot[i] = m.qdot[i];
    }
  });
}

void twa_run_options_init(twa_run_options* opts) {
  if (opts) *opts = {0, -1, 0, 0};
}

twa_status twa_scenario_run(const char* path, const twa_run_options* opts, twa_report** out) {
  return guard([&] {
    require(path && out, "path or out is null");
    harness::ScenarioConfig cfg = harness::load_scenario(path);
    if (opts) {
      if (opts->cycles > 0) cfg.cycles = opts->cycles;
      if (opts->noise_free >= 0) cfg.noise_free = opts->noise_free != 0;
      if (opts->override_seed) cfg.rng_seed = opts->seed;
    }
    auto r = std::make_unique<twa_report>(twa_report{harness::run_scenario(cfg)});
    if (!cfg.output.empty()) harness::emit_report(r->report, cfg.output_format, cfg.output);
    *out = r.release();
  });
}

twa_status twa_bench_run(const char* scenes_dir, int seeds, uint64_t seed, twa_report** out) {
  return guard([&] {
    require(scenes_dir && out, "scenes_dir or out is null");
    require(seeds >= 1, "seeds must be >= 1");
    harness::ScenarioConfig cfg;
    cfg.task = harness::Task::planning_benchmark;
    cfg.cycles = 1;
    cfg.scenes = plan::load_scene_suite(scenes_dir);
    cfg.seeds = seeds;
    cfg.rng_seed = seed;
    *out = new twa_report{harness::run_scenario(cfg)};
  });
}

twa_status twa_report_load(const char* path, twa_report** out) {
  return guard([&] {
    require(path && out, "path or out is null");
    *out = new twa_report{harness::load_report(path)};
  });
}

twa_status twa_report_summarize(const twa_report* report, twa_report_summary* out) {
  return guard([&] {
    require(report && out, "null argument");
    const auto& a = report->report.aggregates;
    *out = {a.cycles, a.successes, a.success_rate};
  });
}

twa_status twa_report_text(const twa_report* report, const char* format, int deterministic,
                           char** text_out) {
  return guard([&] {
    require(report && text_out, "null argument");
    *text_out = dup_string(format_text(report->report, format, deterministic));
  });
}

twa_status twa_report_write(const twa_report* report, const char* path, const char* format,
                            int deterministic) {
  return guard([&] {
    require(report && path, "null argument");
    const harness::TrialReport r =
        deterministic ? harness::without_wall_clock(report->report) : report->report;
    harness::emit_report(r, harness::parse_report_format(format ? format : "json"), path);
  });
}

void twa_report_free(twa_report* report) { delete report; }

void twa_server_options_init(twa_server_options* opts) {
  if (opts) *opts = {"127.0.0.1", 8765, nullptr, nullptr, nullptr, nullptr, 1.0};
}

twa_status twa_server_start(const twa_server_options* opts, twa_server** out) {
  return guard([&] {
    require(opts && out, "opts or out is null");
    require(opts->profile_path, "profile_path is required");
    harness::ScenarioConfig sc;
    sc.arm = opts->arm_path ? kin::load_arm_file(opts->arm_path) : kin::default_arm();
    sc.profile = emu::load_emulator_profile(opts->profile_path);
    if (opts->channel_path) {
      sc.channel = sync::load_channel_file(opts->channel_path);
    } else {
      sc.channel.name = "ideal";
    }
    if (opts->scene_path) sc.layout.obstacles = plan::load_scene_file(opts->scene_path).obstacles;

    harness::ServerConfig cfg;
    cfg.bind_address = opts->bind_address ? opts->bind_address : "127.0.0.1";
    cfg.port = opts->port;
    cfg.cell = harness::make_cell_config(sc, emu::Tool::gripper);
    cfg.layout = sc.layout;
    cfg.realtime_factor = opts->realtime_factor;

    auto s = std::make_unique<harness::TeleopServer>(std::move(cfg));
    s->start();
    *out = new twa_server{std::move(s)};
  });
}

uint16_t twa_server_port(const twa_server* server) { return server ? server->server->port() : 0; }

twa_status twa_server_wait(twa_server* server) {
  return guard([&] {
    require(server, "server is null");
    server->server->wait();
  });
}

twa_status twa_server_stop(twa_server* server) {
  return guard([&] {
    require(server, "server is null");
    server->server->stop();
  });
}

void twa_server_free(twa_server* server) { delete server; }

}  // extern "C"
