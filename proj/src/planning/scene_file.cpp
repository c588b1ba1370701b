#include <algorithm>

#include "common/error.hpp"
#include "common/json_file.hpp"
#include "planning/planning.hpp"

namespace twinarm::plan {

namespace {

Vec3 vec3(const nlohmann::json& j, const char* key) {
  const auto a = json_get<std::vector<double>>(j, key);
  if (a.size() != 3) {
    throw Error(ErrorCode::parse, std::string("'") + key + "' must have 3 entries");
  }
  return {a[0], a[1], a[2]};
}

JointVector joints(const nlohmann::json& j, const char* key) {
  const auto a = json_get<std::vector<double>>(j, key);
  if (a.size() != kin::kDof) {
    throw Error(ErrorCode::parse, std::string("'") + key + "' must have 5 entries");
  }
  JointVector q;
  std::copy(a.begin(), a.end(), q.q.begin());
  return q;
}

}  // namespace

Scene load_scene_file(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path, "twinarm-scene", 1);
  Scene scene;
  scene.name = json_get_or<std::string>(j, "name", path.stem().string());
  for (const auto& s : json_get_or(j, "spheres", nlohmann::json::array())) {
    scene.obstacles.spheres.push_back({vec3(s, "center"), json_get<double>(s, "radius")});
  }
  for (const auto& b : json_get_or(j, "boxes", nlohmann::json::array())) {
    scene.obstacles.boxes.push_back({vec3(b, "min"), vec3(b, "max")});
  }
  for (const auto& q : json_get_or(j, "queries", nlohmann::json::array())) {
    scene.queries.push_back({joints(q, "start"), joints(q, "goal")});
  }
  try {
    validate(scene.obstacles);
  } catch (const Error& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return scene;
}

std::vector<Scene> load_scene_suite(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::io, "scene directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scene> scenes;
  for (const auto& f : files) scenes.push_back(load_scene_file(f));
  return scenes;
}

}  // namespace twinarm::plan
