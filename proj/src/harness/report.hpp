#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinematics/types.hpp"

namespace twinarm::harness {

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
  double max = 0.0;
  std::size_t count = 0;

  friend bool operator==(const Stat&, const Stat&) = default;
};

Stat summarize(const std::vector<double>& values);

// One cycle of a task, or one planner query in a benchmark. Fields that do not
// apply to the task stay empty.
struct CycleRecord {
  int cycle = 0;
  bool success = false;
  std::string failure;  // "<ErrorName>: message" when !success

  std::optional<kin::Pose> target;
  std::optional<kin::Pose> achieved;
  std::optional<double> position_error_mm;
  std::optional<double> angular_error_deg;
  std::optional<double> deviation_mm;  // distance of the error vector from the run's mean
  std::optional<double> alignment_error_mm;
  std::optional<double> volume_ml;
  std::optional<double> volume_error_ml;
  std::optional<double> cycle_time_s;

  std::optional<std::string> scene;
  std::optional<std::string> planner;
  std::optional<int> query;
  std::optional<std::uint64_t> seed;
  std::optional<double> plan_time_s;  // wall clock
  std::optional<double> path_length_rad;
  std::optional<double> execution_s;

  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

struct Aggregates {
  int cycles = 0;
  int successes = 0;
  double success_rate = 0.0;
  std::vector<int> failed_cycles;

  std::optional<Stat> position_error_mm;
  std::optional<Stat> angular_error_deg;
  std::optional<Stat> deviation_mm;
  std::optional<Stat> alignment_error_mm;
  std::optional<Stat> abs_volume_error_ml;
  std::optional<Stat> cycle_time_s;
  std::optional<Stat> path_length_rad;
  std::optional<Stat> execution_s;
  std::optional<double> repeatability_mm;  // max deviation_mm
  std::optional<int> band_violations;      // deviation_mm above band_mm

  friend bool operator==(const Aggregates&, const Aggregates&) = default;
};

// Recomputes every aggregate from the records alone.
Aggregates compute_aggregates(const std::vector<CycleRecord>& records,
                              std::optional<double> band_mm);

struct EnergySummary {
  double mean_current_a = 0.0;
  double peak_current_a = 0.0;
  double mean_power_w = 0.0;
  double energy_j = 0.0;
  double idle_current_a = 0.0;       // profile, not moving
  double full_load_current_a = 0.0;  // profile, moving at full payload
  double full_load_power_w = 0.0;

  friend bool operator==(const EnergySummary&, const EnergySummary&) = default;
};

struct PlannerStats {
  std::string planner;
  int attempts = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_plan_time_s = 0.0;  // wall clock
  double p95_plan_time_s = 0.0;   // wall clock
  double mean_execution_s = 0.0;
  double mean_path_length_rad = 0.0;

  friend bool operator==(const PlannerStats&, const PlannerStats&) = default;
};

struct SyncSummary {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t duplicated = 0;
  std::uint64_t gaps = 0;
  std::uint64_t decode_errors = 0;
  double mean_latency_s = 0.0;
  double max_latency_s = 0.0;
  double max_drift_rad = 0.0;
  double mean_drift_rad = 0.0;

  friend bool operator==(const SyncSummary&, const SyncSummary&) = default;
};

// Host measurements, informational only.
struct HostInfo {
  double wall_time_s = 0.0;
  double cpu_time_s = 0.0;
  double peak_rss_mb = 0.0;

  friend bool operator==(const HostInfo&, const HostInfo&) = default;
};

struct TrialReport {
  std::string task;
  std::string profile;
  std::string channel;
  std::string arm;
  int cycles = 0;
  std::uint64_t rng_seed = 0;
  bool noise_free = false;
  std::optional<double> band_mm;
  double sim_time_s = 0.0;

  std::vector<CycleRecord> records;
  Aggregates aggregates;
  std::optional<EnergySummary> energy;
  std::vector<PlannerStats> planners;
  std::optional<SyncSummary> sync;
  std::optional<HostInfo> host;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

inline constexpr int kReportVersion = 1;

// Drops every wall-clock field so reports from repeated runs compare equal.
TrialReport without_wall_clock(TrialReport report);

nlohmann::json to_json(const TrialReport& report);
TrialReport report_from_json(const nlohmann::json& j);
TrialReport load_report(const std::filesystem::path& path);

std::string report_json_text(const TrialReport& report);
// Header plus one row per record.
std::string report_csv_text(const TrialReport& report);

enum class ReportFormat { json, csv };
ReportFormat parse_report_format(const std::string& name);
void emit_report(const TrialReport& report, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace twinarm::harness
