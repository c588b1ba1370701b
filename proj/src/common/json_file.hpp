#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

namespace twinarm {

// Reads a versioned JSON document. Every file format in the project carries
// {"format": <kind>, "version": <int>}; a mismatch is a parse error.
nlohmann::json read_json_file(const std::filesystem::path& path,
                              std::string_view expected_format,
                              int max_version);

void write_text_file(const std::filesystem::path& path, std::string_view text);

// Field access that turns nlohmann's type errors into ErrorCode::parse.
template <typename T>
T json_get(const nlohmann::json& j, const char* key);

template <typename T>
T json_get_or(const nlohmann::json& j, const char* key, T fallback);

}  // namespace twinarm

#include "common/json_file_inl.hpp"
