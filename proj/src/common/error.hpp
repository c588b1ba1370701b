#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twinarm {

// Stable failure categories; the C API maps these 1:1 onto twa_status.
enum class ErrorCode {
  invalid_argument = 1,
  parse,
  io,
  unreachable,
  degenerate,
  not_converged,
  no_path_found,
  invalid_endpoint,
  decode,
  overweight,
  out_of_reach,
  mismatched_traces,
  scenario,
  internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace twinarm
