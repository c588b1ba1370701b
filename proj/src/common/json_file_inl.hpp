#pragma once

#include <string>

#include "common/error.hpp"

namespace twinarm {

template <typename T>
T json_get(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::parse, std::string("missing field '") + key + "'");
  }
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse,
                std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T json_get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return json_get<T>(j, key);
}

}  // namespace twinarm
