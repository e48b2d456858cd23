#include "biokey/error.hpp"

namespace biokey {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Format: return "format_error";
    case ErrorCode::Integrity: return "integrity_error";
    case ErrorCode::Parameter: return "parameter_error";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::Configuration: return "configuration_error";
    case ErrorCode::State: return "state_error";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Validation: return "validation_error";
    case ErrorCode::Auth: return "auth_error";
    case ErrorCode::OpenSet: return "open_set";
  }
  return "error";
}

}  // namespace biokey
