#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "harness/cell.hpp"
#include "harness/report.hpp"
#include "harness/scenario.hpp"
#include "test_support.hpp"

using namespace twinarm;
using namespace twinarm::harness;

namespace {

ScenarioConfig scenario(const std::string& name, int cycles, bool noise_free) {
  ScenarioConfig cfg = load_scenario(test::data_path("scenarios/" + name + ".json"));
  cfg.cycles = cycles;
  cfg.noise_free = noise_free;
  return cfg;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("summarize") {
  const Stat s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.max == 4.0);
  CHECK(s.count == 4);
  CHECK(summarize({}).count == 0);
}

TEST_CASE("placement report round trips through json and csv") {
  const TrialReport r = run_scenario(scenario("placement_improved", 3, false));
  CHECK(r.cycles == 3);
  CHECK(r.records.size() == 3);
  const TrialReport back = report_from_json(nlohmann::json::parse(report_json_text(r)));
  CHECK(back == r);
  CHECK(line_count(report_csv_text(r)) == 4);

  const auto path = test::temp_path("report.json");
  emit_report(r, ReportFormat::json, path);
  CHECK(load_report(path) == r);
  CHECK(compute_aggregates(r.records, r.band_mm) == r.aggregates);
}

TEST_CASE("runs are deterministic end to end") {
  const auto cfg = scenario("pipetting_improved", 4, false);
  CHECK(without_wall_clock(run_scenario(cfg)) == without_wall_clock(run_scenario(cfg)));
}

TEST_CASE("noise-free run matches the golden report") {
  const TrialReport r = without_wall_clock(run_scenario(scenario("placement_improved", 2, true)));
  std::ifstream in(test::fixture_path("placement_noise_free.json"));
  REQUIRE(in.good());
  const TrialReport golden = report_from_json(nlohmann::json::parse(in));
  REQUIRE(golden.records.size() == r.records.size());
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    CHECK(r.records[i].success == golden.records[i].success);
    CHECK(*r.records[i].position_error_mm == doctest::Approx(*golden.records[i].position_error_mm).epsilon(1e-9));
    CHECK(*r.records[i].cycle_time_s == doctest::Approx(*golden.records[i].cycle_time_s).epsilon(1e-9));
  }
  CHECK(r.sim_time_s == doctest::Approx(golden.sim_time_s).epsilon(1e-9));
}

TEST_CASE("noise-free placement lands on target") {
  const TrialReport r = run_scenario(scenario("placement_improved", 4, true));
  CHECK(r.aggregates.success_rate == 1.0);
  CHECK(r.aggregates.position_error_mm->max < 0.1);
  CHECK(r.aggregates.angular_error_deg->max < 0.01);
  // The slower original servos leave a deterministic lag residual after settling.
  const TrialReport o = run_scenario(scenario("placement_original", 2, true));
  CHECK(o.aggregates.position_error_mm->max < 0.5);
}

TEST_CASE("noise-free repeatability is tight") {
  const TrialReport r = run_scenario(scenario("repeatability_improved", 6, true));
  REQUIRE(r.aggregates.successes == 6);
  for (const auto& rec : r.records) {
    CHECK(*rec.position_error_mm == doctest::Approx(*r.records.front().position_error_mm).epsilon(0.01));
  }
  CHECK(*r.aggregates.repeatability_mm < 1e-3);
  CHECK(*r.aggregates.band_violations == 0);
}

TEST_CASE("noise-free pipetting dispenses the commanded volume") {
  const TrialReport r = run_scenario(scenario("pipetting_original", 4, true));
  REQUIRE(r.aggregates.successes == 4);
  for (const auto& rec : r.records) CHECK(*rec.volume_error_ml == 0.0);
}

TEST_CASE("failed cycles are counted and named") {
  ScenarioConfig cfg = scenario("placement_improved", 3, true);
  cfg.layout.vial_mass = 0.5;
  const TrialReport r = run_scenario(cfg);
  CHECK(r.aggregates.successes == 0);
  CHECK(r.aggregates.success_rate == 0.0);
  CHECK(r.aggregates.failed_cycles == std::vector<int>{0, 1, 2});
  CHECK(r.records[0].failure.rfind("Overweight", 0) == 0);
}

TEST_CASE("energy summary reflects the profile") {
  const TrialReport r = run_scenario(scenario("placement_original", 2, false));
  REQUIRE(r.energy);
  CHECK(r.energy->idle_current_a == doctest::Approx(0.25));
  CHECK(r.energy->full_load_current_a == doctest::Approx(2.0));
  CHECK(r.energy->full_load_power_w == doctest::Approx(100.0));
  CHECK(r.energy->mean_current_a >= 0.25);
  CHECK(r.energy->peak_current_a <= 2.0 + 1e-12);
  CHECK(r.energy->energy_j > 0.0);
}

TEST_CASE("scenario loader errors") {
  test::check_throws_code([] { load_scenario(test::temp_path("missing-scenario.json")); }, ErrorCode::io);
  const auto bad_task = test::write_temp("bad-task.json", R"({"format": "twinarm-scenario", "version": 1,
    "task": "juggling", "profile": ")" + test::data_path("profiles/improved.json").string() +
    R"(", "channel": ")" + test::data_path("channels/ideal.json").string() + R"("})");
  test::check_throws_code([&] { load_scenario(bad_task); }, ErrorCode::scenario);
  const auto missing_ref = test::write_temp("missing-ref.json", R"({"format": "twinarm-scenario", "version": 1,
    "task": "placement", "profile": "nowhere.json", "channel": "nowhere.json"})");
  test::check_throws_code([&] { load_scenario(missing_ref); }, ErrorCode::io);
  const auto zero = test::write_temp("zero-cycles.json", R"({"format": "twinarm-scenario", "version": 1,
    "task": "placement", "cycles": 0, "profile": ")" + test::data_path("profiles/improved.json").string() +
    R"(", "channel": ")" + test::data_path("channels/ideal.json").string() + R"("})");
  test::check_throws_code([&] { load_scenario(zero); }, ErrorCode::scenario);
  const auto junk = test::write_temp("junk.json", "{not json");
  CHECK_THROWS_AS(load_scenario(junk), Error);
}

TEST_CASE("report format names") {
  CHECK(parse_report_format("json") == ReportFormat::json);
  CHECK(parse_report_format("csv") == ReportFormat::csv);
  CHECK_THROWS_AS(parse_report_format("xml"), Error);
}

TEST_CASE("cell keeps the current motion when a move fails") {
  ScenarioConfig sc = scenario("placement_improved", 1, true);
  Cell cell(make_cell_config(sc, emu::Tool::gripper));
  const Vec3 above = sc.layout.sources[0] + Vec3{0, 0, sc.layout.approach_height};
  const Pose reachable{above, -kPi / 2, 0.0};
  cell.begin_move(reachable);
  const JointVector goal = cell.command();
  CHECK_THROWS_AS(cell.begin_move({{1.0, 0, 0}, 0, 0}), Error);
  CHECK(cell.command() == goal);
  CHECK(cell.run_until_idle(30.0));
  const Pose p = kin::forward_kinematics(cell.config().arm, cell.state().q_actual);
  CHECK((p.position - reachable.position).norm() < 1e-3);
}

TEST_CASE("twin follows the physical arm during a task") {
  const TrialReport r = run_scenario(scenario("placement_improved", 2, false));
  REQUIRE(r.sync);
  CHECK(r.sync->sent > 0);
  CHECK(r.sync->decode_errors == 0);
  CHECK(r.sync->max_drift_rad < 0.2);
}

}  // TEST_SUITE
