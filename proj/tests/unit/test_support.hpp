#pragma once

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "common/error.hpp"
#include "kinematics/types.hpp"

namespace twinarm::test {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(TWINARM_DATA_DIR) / rel;
}

inline std::filesystem::path fixture_path(const std::string& rel) {
  return std::filesystem::path(TWINARM_FIXTURE_DIR) / rel;
}

inline std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "twinarm-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto p = temp_path(name);
  std::ofstream(p) << text;
  return p;
}

inline kin::JointVector random_in_limits(const kin::ArmModel& arm, std::mt19937_64& rng) {
  kin::JointVector q;
  for (std::size_t i = 0; i < kin::kDof; ++i) {
    std::uniform_real_distribution<double> d(arm.joints[i].lower_limit, arm.joints[i].upper_limit);
    q[i] = d(rng);
  }
  return q;
}

template <class F>
void check_throws_code(F&& f, ErrorCode expected) {
  try {
    f();
    FAIL("expected an exception with code " << error_code_name(expected));
  } catch (const Error& e) {
    CHECK_MESSAGE(e.code() == expected, "got " << error_code_name(e.code()) << ": " << e.what());
  }
}

}  // namespace twinarm::test
