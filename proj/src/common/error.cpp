#include "common/error.hpp"

namespace twinarm {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parse: return "ParseError";
    case ErrorCode::io: return "IoError";
    case ErrorCode::unreachable: return "Unreachable";
    case ErrorCode::degenerate: return "Degenerate";
    case ErrorCode::not_converged: return "NotConverged";
    case ErrorCode::no_path_found: return "NoPathFound";
    case ErrorCode::invalid_endpoint: return "InvalidEndpoint";
    case ErrorCode::decode: return "DecodeError";
    case ErrorCode::overweight: return "Overweight";
    case ErrorCode::out_of_reach: return "OutOfReach";
    case ErrorCode::mismatched_traces: return "MismatchedTraces";
    case ErrorCode::scenario: return "ScenarioError";
    case ErrorCode::internal: return "InternalError";
  }
  return "Unknown";
}

}  // namespace twinarm
