#include "harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "common/error.hpp"
#include "common/json_file.hpp"

namespace twinarm::harness {

using nlohmann::json;

Stat summarize(const std::vector<double>& values) {
  Stat s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  s.max = values.front();
  for (double v : values) {
    sum += v;
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

Aggregates compute_aggregates(const std::vector<CycleRecord>& records,
                              std::optional<double> band_mm) {
  Aggregates a;
  a.cycles = static_cast<int>(records.size());
  std::vector<double> pos, ang, dev, align, vol, cyc, len, exe;
  for (const CycleRecord& r : records) {
    if (r.success) {
      ++a.successes;
    } else {
      a.failed_cycles.push_back(r.cycle);
    }
    if (r.position_error_mm) pos.push_back(*r.position_error_mm);
    if (r.angular_error_deg) ang.push_back(*r.angular_error_deg);
    if (r.deviation_mm) dev.push_back(*r.deviation_mm);
    if (r.alignment_error_mm) align.push_back(*r.alignment_error_mm);
    if (r.volume_error_ml) vol.push_back(std::abs(*r.volume_error_ml));
    if (r.cycle_time_s) cyc.push_back(*r.cycle_time_s);
    if (r.path_length_rad) len.push_back(*r.path_length_rad);
    if (r.execution_s) exe.push_back(*r.execution_s);
  }
  a.success_rate = a.cycles ? static_cast<double>(a.successes) / a.cycles : 0.0;

  auto stat = [](const std::vector<double>& v) -> std::optional<Stat> {
    if (v.empty()) return std::nullopt;
    return summarize(v);
  };
  a.position_error_mm = stat(pos);
  a.angular_error_deg = stat(ang);
  a.deviation_mm = stat(dev);
  a.alignment_error_mm = stat(align);
  a.abs_volume_error_ml = stat(vol);
  a.cycle_time_s = stat(cyc);
  a.path_length_rad = stat(len);
  a.execution_s = stat(exe);
  if (!dev.empty()) {
    a.repeatability_mm = a.deviation_mm->max;
    if (band_mm) {
      a.band_violations = static_cast<int>(
          std::count_if(dev.begin(), dev.end(), [&](double d) { return d > *band_mm; }));
    }
  }
  return a;
}

TrialReport without_wall_clock(TrialReport report) {
  for (CycleRecord& r : report.records) r.plan_time_s.reset();
  for (PlannerStats& p : report.planners) {
    p.mean_plan_time_s = 0.0;
    p.p95_plan_time_s = 0.0;
  }
  report.host.reset();
  return report;
}

namespace {

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> take(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return json_get<T>(j, key);
}

json pose_json(const kin::Pose& p) {
  return {{"position", {p.position.x, p.position.y, p.position.z}},
          {"pitch", p.pitch},
          {"roll", p.roll}};
}

kin::Pose pose_from(const json& j) {
  const auto pos = json_get<std::vector<double>>(j, "position");
  if (pos.size() != 3) throw Error(ErrorCode::parse, "pose position needs 3 values");
  return {{pos[0], pos[1], pos[2]}, json_get<double>(j, "pitch"), json_get<double>(j, "roll")};
}

json stat_json(const Stat& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"max", s.max}, {"count", s.count}};
}

Stat stat_from(const json& j) {
  return {json_get<double>(j, "mean"), json_get<double>(j, "std"), json_get<double>(j, "max"),
          json_get<std::size_t>(j, "count")};
}

void put_stat(json& j, const char* key, const std::optional<Stat>& s) {
  if (s) j[key] = stat_json(*s);
}

std::optional<Stat> take_stat(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return stat_from(j.at(key));
}

json record_json(const CycleRecord& r) {
  json j = {{"cycle", r.cycle}, {"success", r.success}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  if (r.target) j["target"] = pose_json(*r.target);
  if (r.achieved) j["achieved"] = pose_json(*r.achieved);
  put(j, "position_error_mm", r.position_error_mm);
  put(j, "angular_error_deg", r.angular_error_deg);
  put(j, "deviation_mm", r.deviation_mm);
  put(j, "alignment_error_mm", r.alignment_error_mm);
  put(j, "volume_ml", r.volume_ml);
  put(j, "volume_error_ml", r.volume_error_ml);
  put(j, "cycle_time_s", r.cycle_time_s);
  put(j, "scene", r.scene);
  put(j, "planner", r.planner);
  put(j, "query", r.query);
  put(j, "seed", r.seed);
  put(j, "plan_time_s", r.plan_time_s);
  put(j, "path_length_rad", r.path_length_rad);
  put(j, "execution_s", r.execution_s);
  return j;
}

CycleRecord record_from(const json& j) {
  CycleRecord r;
  r.cycle = json_get<int>(j, "cycle");
  r.success = json_get<bool>(j, "success");
  r.failure = json_get_or<std::string>(j, "failure", "");
  if (j.contains("target")) r.target = pose_from(j.at("target"));
  if (j.contains("achieved")) r.achieved = pose_from(j.at("achieved"));
  r.position_error_mm = take<double>(j, "position_error_mm");
  r.angular_error_deg = take<double>(j, "angular_error_deg");
  r.deviation_mm = take<double>(j, "deviation_mm");
  r.alignment_error_mm = take<double>(j, "alignment_error_mm");
  r.volume_ml = take<double>(j, "volume_ml");
  r.volume_error_ml = take<double>(j, "volume_error_ml");
  r.cycle_time_s = take<double>(j, "cycle_time_s");
  r.scene = take<std::string>(j, "scene");
  r.planner = take<std::string>(j, "planner");
  r.query = take<int>(j, "query");
  r.seed = take<std::uint64_t>(j, "seed");
  r.plan_time_s = take<double>(j, "plan_time_s");
  r.path_length_rad = take<double>(j, "path_length_rad");
  r.execution_s = take<double>(j, "execution_s");
  return r;
}

json aggregates_json(const Aggregates& a) {
  json j = {{"cycles", a.cycles},
            {"successes", a.successes},
            {"success_rate", a.success_rate},
            {"failed_cycles", a.failed_cycles}};
  put_stat(j, "position_error_mm", a.position_error_mm);
  put_stat(j, "angular_error_deg", a.angular_error_deg);
  put_stat(j, "deviation_mm", a.deviation_mm);
  put_stat(j, "alignment_error_mm", a.alignment_error_mm);
  put_stat(j, "abs_volume_error_ml", a.abs_volume_error_ml);
  put_stat(j, "cycle_time_s", a.cycle_time_s);
  put_stat(j, "path_length_rad", a.path_length_rad);
  put_stat(j, "execution_s", a.execution_s);
  put(j, "repeatability_mm", a.repeatability_mm);
  put(j, "band_violations", a.band_violations);
  return j;
}

Aggregates aggregates_from(const json& j) {
  Aggregates a;
  a.cycles = json_get<int>(j, "cycles");
  a.successes = json_get<int>(j, "successes");
  a.success_rate = json_get<double>(j, "success_rate");
  a.failed_cycles = json_get<std::vector<int>>(j, "failed_cycles");
  a.position_error_mm = take_stat(j, "position_error_mm");
  a.angular_error_deg = take_stat(j, "angular_error_deg");
  a.deviation_mm = take_stat(j, "deviation_mm");
  a.alignment_error_mm = take_stat(j, "alignment_error_mm");
  a.abs_volume_error_ml = take_stat(j, "abs_volume_error_ml");
  a.cycle_time_s = take_stat(j, "cycle_time_s");
  a.path_length_rad = take_stat(j, "path_length_rad");
  a.execution_s = take_stat(j, "execution_s");
  a.repeatability_mm = take<double>(j, "repeatability_mm");
  a.band_violations = take<int>(j, "band_violations");
  return a;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <typename T>
std::string cell(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return num(*v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else {
    return std::to_string(*v);
  }
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

json to_json(const TrialReport& r) {
  json j = {{"format", "twinarm-report"},
            {"version", kReportVersion},
            {"task", r.task},
            {"profile", r.profile},
            {"channel", r.channel},
            {"arm", r.arm},
            {"cycles", r.cycles},
            {"rng_seed", r.rng_seed},
            {"noise_free", r.noise_free},
            {"sim_time_s", r.sim_time_s}};
  put(j, "band_mm", r.band_mm);
  json recs = json::array();
  for (const CycleRecord& c : r.records) recs.push_back(record_json(c));
  j["records"] = std::move(recs);
  j["aggregates"] = aggregates_json(r.aggregates);
  if (r.energy) {
    const EnergySummary& e = *r.energy;
    j["energy"] = {{"mean_current_a", e.mean_current_a},
                   {"peak_current_a", e.peak_current_a},
                   {"mean_power_w", e.mean_power_w},
                   {"energy_j", e.energy_j},
                   {"idle_current_a", e.idle_current_a},
                   {"full_load_current_a", e.full_load_current_a},
                   {"full_load_power_w", e.full_load_power_w}};
  }
  json planners = json::array();
  for (const PlannerStats& p : r.planners) {
    planners.push_back({{"planner", p.planner},
                        {"attempts", p.attempts},
                        {"successes", p.successes},
                        {"success_rate", p.success_rate},
                        {"mean_plan_time_s", p.mean_plan_time_s},
                        {"p95_plan_time_s", p.p95_plan_time_s},
                        {"mean_execution_s", p.mean_execution_s},
                        {"mean_path_length_rad", p.mean_path_length_rad}});
  }
  j["planners"] = std::move(planners);
  if (r.sync) {
    const SyncSummary& s = *r.sync;
    j["sync"] = {{"sent", s.sent},
                 {"delivered", s.delivered},
                 {"dropped", s.dropped},
                 {"duplicated", s.duplicated},
                 {"gaps", s.gaps},
                 {"decode_errors", s.decode_errors},
                 {"mean_latency_s", s.mean_latency_s},
                 {"max_latency_s", s.max_latency_s},
                 {"max_drift_rad", s.max_drift_rad},
                 {"mean_drift_rad", s.mean_drift_rad}};
  }
  if (r.host) {
    j["host"] = {{"wall_time_s", r.host->wall_time_s},
                 {"cpu_time_s", r.host->cpu_time_s},
                 {"peak_rss_mb", r.host->peak_rss_mb}};
  }
  return j;
}

TrialReport report_from_json(const json& j) {
  if (json_get<std::string>(j, "format") != "twinarm-report") {
    throw Error(ErrorCode::parse, "not a twinarm-report document");
  }
  const int version = json_get<int>(j, "version");
  if (version < 1 || version > kReportVersion) {
    throw Error(ErrorCode::parse, "unsupported report version " + std::to_string(version));
  }
  TrialReport r;
  r.task = json_get<std::string>(j, "task");
  r.profile = json_get<std::string>(j, "profile");
  r.channel = json_get<std::string>(j, "channel");
  r.arm = json_get<std::string>(j, "arm");
  r.cycles = json_get<int>(j, "cycles");
  r.rng_seed = json_get<std::uint64_t>(j, "rng_seed");
  r.noise_free = json_get<bool>(j, "noise_free");
  r.sim_time_s = json_get<double>(j, "sim_time_s");
  r.band_mm = take<double>(j, "band_mm");
  for (const json& c : json_get<json>(j, "records")) r.records.push_back(record_from(c));
  r.aggregates = aggregates_from(json_get<json>(j, "aggregates"));
  if (j.contains("energy")) {
    const json& e = j.at("energy");
    r.energy = EnergySummary{json_get<double>(e, "mean_current_a"),
                             json_get<double>(e, "peak_current_a"),
                             json_get<double>(e, "mean_power_w"),
                             json_get<double>(e, "energy_j"),
                             json_get<double>(e, "idle_current_a"),
                             json_get<double>(e, "full_load_current_a"),
                             json_get<double>(e, "full_load_power_w")};
  }
  for (const json& p : json_get_or<json>(j, "planners", json::array())) {
    r.planners.push_back({json_get<std::string>(p, "planner"),
                          json_get<int>(p, "attempts"),
                          json_get<int>(p, "successes"),
                          json_get<double>(p, "success_rate"),
                          json_get<double>(p, "mean_plan_time_s"),
                          json_get<double>(p, "p95_plan_time_s"),
                          json_get<double>(p, "mean_execution_s"),
                          json_get<double>(p, "mean_path_length_rad")});
  }
  if (j.contains("sync")) {
    const json& s = j.at("sync");
    r.sync = SyncSummary{json_get<std::uint64_t>(s, "sent"),
                         json_get<std::uint64_t>(s, "delivered"),
                         json_get<std::uint64_t>(s, "dropped"),
                         json_get<std::uint64_t>(s, "duplicated"),
                         json_get<std::uint64_t>(s, "gaps"),
                         json_get<std::uint64_t>(s, "decode_errors"),
                         json_get<double>(s, "mean_latency_s"),
                         json_get<double>(s, "max_latency_s"),
                         json_get<double>(s, "max_drift_rad"),
                         json_get<double>(s, "mean_drift_rad")};
  }
  if (j.contains("host")) {
    const json& h = j.at("host");
    r.host = HostInfo{json_get<double>(h, "wall_time_s"), json_get<double>(h, "cpu_time_s"),
                      json_get<double>(h, "peak_rss_mb")};
  }
  return r;
}

TrialReport load_report(const std::filesystem::path& path) {
  return report_from_json(read_json_file(path, "twinarm-report", kReportVersion));
}

std::string report_json_text(const TrialReport& report) { return to_json(report).dump(2) + "\n"; }

std::string report_csv_text(const TrialReport& report) {
  std::ostringstream out;
  out << "cycle,success,failure,"
         "target_x_m,target_y_m,target_z_m,target_pitch_rad,target_roll_rad,"
         "achieved_x_m,achieved_y_m,achieved_z_m,achieved_pitch_rad,achieved_roll_rad,"
         "position_error_mm,angular_error_deg,deviation_mm,alignment_error_mm,"
         "volume_ml,volume_error_ml,cycle_time_s,"
         "scene,planner,query,seed,plan_time_s,path_length_rad,execution_s\n";
  auto pose_cells = [&](const std::optional<kin::Pose>& p) {
    if (!p) {
      out << ",,,,,";
      return;
    }
    out << num(p->position.x) << ',' << num(p->position.y) << ',' << num(p->position.z) << ','
        << num(p->pitch) << ',' << num(p->roll) << ',';
  };
  for (const CycleRecord& r : report.records) {
    out << r.cycle << ',' << (r.success ? "true" : "false") << ',' << csv_quote(r.failure) << ',';
    pose_cells(r.target);
    pose_cells(r.achieved);
    out << cell(r.position_error_mm) << ',' << cell(r.angular_error_deg) << ','
        << cell(r.deviation_mm) << ',' << cell(r.alignment_error_mm) << ','
        << cell(r.volume_ml) << ',' << cell(r.volume_error_ml) << ','
        << cell(r.cycle_time_s) << ',' << csv_quote(cell(r.scene)) << ','
        << csv_quote(cell(r.planner)) << ',' << cell(r.query) << ',' << cell(r.seed) << ','
        << cell(r.plan_time_s) << ',' << cell(r.path_length_rad) << ','
        << cell(r.execution_s) << '\n';
  }
  return out.str();
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw Error(ErrorCode::invalid_argument, "unknown report format '" + name + "'");
}

void emit_report(const TrialReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  write_text_file(path, format == ReportFormat::json ? report_json_text(report)
                                                     : report_csv_text(report));
}

}  // namespace twinarm::harness
