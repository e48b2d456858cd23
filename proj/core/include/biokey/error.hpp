#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biokey {

enum class ErrorCode {
  Format,
  Integrity,
  Parameter,
  InsufficientData,
  Configuration,
  State,
  Degenerate,
  NotFound,
  Conflict,
  Validation,
  Auth,
  OpenSet,
};

std::string_view to_string(ErrorCode code);

/// Error type thrown by every biokey module. The code maps onto the HTTP
/// error payload `{code, message}` used by the service.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace biokey
