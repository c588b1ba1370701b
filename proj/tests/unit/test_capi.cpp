#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "twinarm/twinarm.h"

namespace {

std::string data(const std::string& rel) { return std::string(TWINARM_DATA_DIR) + "/" + rel; }

struct Arm {
  twa_arm* p = nullptr;
  Arm() { REQUIRE(twa_arm_default(&p) == TWA_OK); }
  ~Arm() { twa_arm_free(p); }
};

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("status names and version") {
  CHECK(std::string(twa_version()) == "1.0.0");
  CHECK(std::string(twa_status_name(TWA_OK)) == "Ok");
  CHECK(std::string(twa_status_name(TWA_E_DECODE)) == "DecodeError");
  CHECK(std::string(twa_status_name(TWA_E_UNREACHABLE)) == "Unreachable");
  CHECK(std::string(twa_status_name(static_cast<twa_status>(99))) == "Unknown");
  for (int s = TWA_E_INVALID_ARGUMENT; s <= TWA_E_INTERNAL; ++s) {
    CHECK(std::strlen(twa_status_name(static_cast<twa_status>(s))) > 0);
  }
}

TEST_CASE("null arguments are rejected") {
  CHECK(twa_arm_default(nullptr) == TWA_E_INVALID_ARGUMENT);
  CHECK(std::strlen(twa_last_error()) > 0);
  twa_pose p;
  const double q[TWA_DOF] = {};
  CHECK(twa_fk(nullptr, q, &p) == TWA_E_INVALID_ARGUMENT);
  CHECK(twa_planar_ik(1, 0, 1, 1, 1, nullptr, nullptr) == TWA_E_INVALID_ARGUMENT);
  CHECK(twa_wire_encode(nullptr, nullptr) == TWA_E_INVALID_ARGUMENT);
  CHECK(twa_report_load(nullptr, nullptr) == TWA_E_INVALID_ARGUMENT);
  CHECK(twa_server_start(nullptr, nullptr) == TWA_E_INVALID_ARGUMENT);
  twa_arm_free(nullptr);
  twa_report_free(nullptr);
  twa_server_free(nullptr);
  twa_string_free(nullptr);
  twa_run_options_init(nullptr);
  CHECK(twa_server_port(nullptr) == 0);
}

TEST_CASE("kinematics through the C API") {
  Arm arm;
  const double home[TWA_DOF] = {};
  twa_pose p;
  REQUIRE(twa_fk(arm.p, home, &p) == TWA_OK);
  CHECK(p.x == doctest::Approx(0.40));
  CHECK(p.z == doctest::Approx(0.10));

  double t1 = 0, t2 = 0;
  REQUIRE(twa_planar_ik(0, 1, 1, 1, 1, &t1, &t2) == TWA_OK);
  CHECK(t1 == doctest::Approx(M_PI / 6));
  CHECK(t2 == doctest::Approx(2 * M_PI / 3));
  CHECK(twa_planar_ik(3, 0, 1, 1, 1, &t1, &t2) == TWA_E_UNREACHABLE);
  CHECK(twa_planar_ik(0, 0, 1, 1, 1, &t1, &t2) == TWA_E_DEGENERATE);

  const double q[TWA_DOF] = {0.3, 0.2, -0.5, -0.4, 0.1};
  twa_pose target;
  REQUIRE(twa_fk(arm.p, q, &target) == TWA_OK);
  double sol[TWA_DOF];
  twa_ik_report rep;
  REQUIRE(twa_ik_solve(arm.p, &target, nullptr, sol, &rep) == TWA_OK);
  CHECK(rep.position_residual <= 1e-4);
  twa_pose reached;
  twa_fk(arm.p, sol, &reached);
  CHECK(std::hypot(reached.x - target.x, reached.y - target.y, reached.z - target.z) <= 1e-4);

  const twa_pose far = {2, 0, 0, 0, 0};
  CHECK(twa_ik_solve(arm.p, &far, nullptr, sol, nullptr) == TWA_E_UNREACHABLE);

  double j[TWA_DOF * TWA_DOF];
  REQUIRE(twa_jacobian(arm.p, home, j) == TWA_OK);
  CHECK(j[0 * 5 + 0] == doctest::Approx(0.0));
  CHECK(j[1 * 5 + 0] == doctest::Approx(0.40));
  CHECK(j[4 * 5 + 4] == doctest::Approx(1.0));

  char* desc = nullptr;
  REQUIRE(twa_arm_describe(arm.p, &desc) == TWA_OK);
  CHECK(std::string(desc).find("twinarm-arm") != std::string::npos);
  twa_string_free(desc);

  twa_arm* loaded = nullptr;
  CHECK(twa_arm_load(data("arms/default.json").c_str(), &loaded) == TWA_OK);
  twa_arm_free(loaded);
  CHECK(twa_arm_load("/nonexistent/arm.json", &loaded) == TWA_E_IO);
}

TEST_CASE("wire functions") {
  twa_joint_state m{};
  m.seq = 0x0102030405060708ull;
  m.timestamp = 1.25;
  const double q[5] = {0.5, -0.25, 1.0, -1.5, 3.0}, qd[5] = {0.125, -2.0, 0.0, 1.0, -0.5};
  std::memcpy(m.q, q, sizeof q);
  std::memcpy(m.qdot, qd, sizeof qd);
  uint8_t buf[TWA_WIRE_SIZE];
  REQUIRE(twa_wire_encode(&m, buf) == TWA_OK);
  CHECK(buf[0] == 'J');
  CHECK(buf[1] == 'S');
  CHECK(buf[3] == 0x08);
  twa_joint_state back{};
  REQUIRE(twa_wire_decode(buf, sizeof buf, &back) == TWA_OK);
  CHECK(back.seq == m.seq);
  CHECK(std::memcmp(back.q, m.q, sizeof q) == 0);
  CHECK(twa_wire_decode(buf, sizeof buf - 1, &back) == TWA_E_DECODE);
  buf[50] ^= 1;
  CHECK(twa_wire_decode(buf, sizeof buf, &back) == TWA_E_DECODE);
  CHECK(twa_wire_decode(nullptr, 0, &back) == TWA_E_DECODE);
}

TEST_CASE("scenario runs and reports") {
  twa_run_options o;
  twa_run_options_init(&o);
  CHECK(o.noise_free == -1);
  o.cycles = 2;
  o.override_seed = 1;
  o.seed = 5;
  twa_report* r = nullptr;
  REQUIRE(twa_scenario_run(data("scenarios/placement_improved.json").c_str(), &o, &r) == TWA_OK);
  twa_report_summary s;
  REQUIRE(twa_report_summarize(r, &s) == TWA_OK);
  CHECK(s.cycles == 2);
  CHECK(s.success_rate == doctest::Approx(static_cast<double>(s.successes) / 2));

  char* csv = nullptr;
  REQUIRE(twa_report_text(r, "csv", 1, &csv) == TWA_OK);
  int lines = 0;
  for (const char* c = csv; *c; ++c) lines += *c == '\n';
  CHECK(lines == 3);
  twa_string_free(csv);
  char* text = nullptr;
  CHECK(twa_report_text(r, "xml", 0, &text) != TWA_OK);

  const auto path = (std::filesystem::temp_directory_path() / "twa-capi-report.json").string();
  REQUIRE(twa_report_write(r, path.c_str(), "json", 1) == TWA_OK);
  twa_report* again = nullptr;
  REQUIRE(twa_report_load(path.c_str(), &again) == TWA_OK);
  char* a = nullptr;
  char* b = nullptr;
  twa_report_text(r, "json", 1, &a);
  twa_report_text(again, "json", 1, &b);
  CHECK(std::string(a) == std::string(b));
  twa_string_free(a);
  twa_string_free(b);
  twa_report_free(again);
  twa_report_free(r);

  CHECK(twa_scenario_run("/nonexistent.json", nullptr, &r) == TWA_E_IO);
  CHECK(twa_bench_run(data("scenes/suite").c_str(), 0, 1, &r) == TWA_E_INVALID_ARGUMENT);
}

TEST_CASE("server lifecycle") {
  twa_server_options o;
  twa_server_options_init(&o);
  CHECK(o.port == 8765);
  CHECK(o.realtime_factor == 1.0);
  o.port = 0;
  twa_server* s = nullptr;
  CHECK(twa_server_start(&o, &s) == TWA_E_INVALID_ARGUMENT);
  const std::string profile = data("profiles/improved.json");
  o.profile_path = profile.c_str();
  REQUIRE(twa_server_start(&o, &s) == TWA_OK);
  CHECK(twa_server_port(s) > 0);
  CHECK(twa_server_stop(s) == TWA_OK);
  CHECK(twa_server_wait(s) == TWA_OK);
  twa_server_free(s);
}

}  // TEST_SUITE
