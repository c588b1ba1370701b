// twinarm command line: run scenarios, serve the teleop endpoint, benchmark
// planners and convert reports. Links only the C API.
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "twinarm/twinarm.h"

#ifndef TWINARM_DATA_DIR
#define TWINARM_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace {

enum class Level { error = 0, warn, info, debug };

Level log_level() {
  const char* v = std::getenv("TWINARM_LOG");
  if (!v) return Level::warn;
  const std::string s(v);
  if (s == "error") return Level::error;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  return Level::warn;
}

void log(Level level, const std::string& msg) {
  if (level <= log_level()) std::cerr << "twinarm: " << msg << "\n";
}

struct Failure {
  twa_status status;
  std::string message;
};

// Every failure leaves as one JSON object on stderr.
int fail(const Failure& f) {
  const nlohmann::json j = {{"error", twa_status_name(f.status)},
                            {"code", static_cast<int>(f.status)},
                            {"message", f.message}};
  std::cerr << j.dump() << "\n";
  return 1 + static_cast<int>(f.status);
}

void check(twa_status s) {
  if (s != TWA_OK) throw Failure{s, twa_last_error()};
}

fs::path data_dir() {
  if (const char* v = std::getenv("TWINARM_DATA_DIR")) return v;
  return TWINARM_DATA_DIR;
}

// A preset name ("improved") or a path to a file.
std::string resolve(const std::string& value, const char* kind) {
  if (value.empty() || fs::exists(value)) return value;
  const fs::path preset = data_dir() / kind / (value + ".json");
  if (fs::exists(preset)) return preset.string();
  throw Failure{TWA_E_IO, std::string("no ") + kind + " named '" + value + "' (looked for " +
                              preset.string() + ")"};
}

struct Report {
  twa_report* r = nullptr;
  ~Report() { twa_report_free(r); }
};

void emit(const Report& rep, const std::string& output, const std::string& format, bool deterministic) {
  if (output.empty() || output == "-") {
    char* text = nullptr;
    check(twa_report_text(rep.r, format.c_str(), deterministic, &text));
    std::fputs(text, stdout);
    twa_string_free(text);
  } else {
    check(twa_report_write(rep.r, output.c_str(), format.c_str(), deterministic));
    log(Level::info, "wrote " + output);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinarm: arm kinematics, planning, emulation and twin sync"};
  app.set_version_flag("--version", std::string(twa_version()));
  app.require_subcommand(1);

  std::string output, format = "json";
  bool deterministic = false;

  auto* run = app.add_subcommand("run", "Run a scenario file and print its report");
  std::string scenario;
  std::optional<int> cycles;
  std::optional<std::uint64_t> seed;
  bool noise_free = false;
  run->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--cycles", cycles, "Override the cycle count")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Override the RNG seed");
  run->add_flag("--noise-free", noise_free, "Disable every injected error source");
  run->add_option("-o,--output", output, "Report file (default stdout)");
  run->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  run->add_flag("--deterministic", deterministic, "Drop wall-clock fields from the report");

  auto* serve = app.add_subcommand("serve", "Serve the teleop WebSocket endpoint");
  std::string bind = "127.0.0.1", profile = "improved", arm, channel = "ideal",
              scene = "";
  int port = 8765;
  double realtime = 1.0;
  serve->add_option("--bind", bind, "Bind address");
  serve->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_option("--profile", profile, "Emulator profile name or file");
  serve->add_option("--arm", arm, "Arm description file (default arm if omitted)");
  serve->add_option("--channel", channel, "Channel preset name or file");
  serve->add_option("--scene", scene, "Scene file with workcell obstacles");
  serve->add_option("--realtime", realtime, "Sim seconds per wall second")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Planner benchmark over a scene directory");
  std::string scenes = (data_dir() / "scenes" / "suite").string();
  int seeds = 100;
  std::uint64_t bench_seed = 1;
  bench->add_option("--scenes", scenes, "Directory of scene files")->check(CLI::ExistingDirectory);
  bench->add_option("--seeds", seeds, "Seeds per query")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "Base seed");
  bench->add_option("-o,--output", output, "Report file (default stdout)");
  bench->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  bench->add_flag("--deterministic", deterministic, "Drop wall-clock fields from the report");

  auto* report = app.add_subcommand("report", "Re-emit a saved report as json or csv");
  std::string input;
  report->add_option("input", input, "Report file")->required()->check(CLI::ExistingFile);
  report->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  report->add_option("-o,--output", output, "Output file (default stdout)");
  report->add_flag("--deterministic", deterministic, "Drop wall-clock fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail({TWA_E_INVALID_ARGUMENT, e.what()});
  }

  try {
    if (*run) {
      twa_run_options opts;
      twa_run_options_init(&opts);
      if (cycles) opts.cycles = *cycles;
      if (noise_free) opts.noise_free = 1;
      if (seed) {
        opts.override_seed = 1;
        opts.seed = *seed;
      }
      log(Level::info, "running " + scenario);
      Report rep;
      check(twa_scenario_run(scenario.c_str(), &opts, &rep.r));
      twa_report_summary sum;
      check(twa_report_summarize(rep.r, &sum));
      log(Level::info, std::to_string(sum.successes) + "/" + std::to_string(sum.cycles) + " cycles succeeded");
      emit(rep, output, format, deterministic);
    } else if (*bench) {
      log(Level::info, "benchmarking " + scenes);
      Report rep;
      check(twa_bench_run(scenes.c_str(), seeds, bench_seed, &rep.r));
      emit(rep, output, format, deterministic);
    } else if (*report) {
      Report rep;
      check(twa_report_load(input.c_str(), &rep.r));
      emit(rep, output, format, deterministic);
    } else if (*serve) {
      const std::string profile_path = resolve(profile, "profiles");
      const std::string channel_path = resolve(channel, "channels");
      twa_server_options opts;
      twa_server_options_init(&opts);
      opts.bind_address = bind.c_str();
      opts.port = static_cast<std::uint16_t>(port);
      opts.profile_path = profile_path.c_str();
      opts.channel_path = channel_path.empty() ? nullptr : channel_path.c_str();
      opts.arm_path = arm.empty() ? nullptr : arm.c_str();
      opts.scene_path = scene.empty() ? nullptr : scene.c_str();
      opts.realtime_factor = realtime;

      // Block the signals before any thread starts so only sigwait sees them.
      // A handler replaces an inherited SIG_IGN, which would discard them.
      std::signal(SIGINT, [](int) {});
      std::signal(SIGTERM, [](int) {});
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);

      twa_server* server = nullptr;
      check(twa_server_start(&opts, &server));
      const nlohmann::json ready = {{"listening", bind}, {"port", twa_server_port(server)}};
      std::cout << ready.dump() << std::endl;
      int sig = 0;
      sigwait(&set, &sig);
      log(Level::info, "signal " + std::to_string(sig) + ", stopping");
      twa_server_stop(server);
      twa_server_free(server);
    }
  } catch (const Failure& f) {
    return fail(f);
  }
  return 0;
}
