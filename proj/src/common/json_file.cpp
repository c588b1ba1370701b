#include "common/json_file.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "common/error.hpp"

namespace twinarm {

nlohmann::json read_json_file(const std::filesystem::path& path,
                              std::string_view expected_format,
                              int max_version) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  auto format = json_get<std::string>(j, "format");
  if (format != expected_format) {
    throw Error(ErrorCode::parse, path.string() + ": expected format '" +
                                      std::string(expected_format) +
                                      "', got '" + format + "'");
  }
  int version = json_get<int>(j, "version");
  if (version < 1 || version > max_version) {
    throw Error(ErrorCode::parse, path.string() + ": unsupported version " +
                                      std::to_string(version));
  }
  return j;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io, "cannot write " + path.string());
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw Error(ErrorCode::io, "write failed for " + path.string());
  }
}

}  // namespace twinarm
