#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imblr {

enum class ErrorCode {
  InvalidArgument,
  NotPositiveDefinite,
  DomainError,
  UnsupportedDimension,
  InvalidModel,
  MomentOverflow,
  SeparationSuspected,
  MaxIterations,
  NoInteriorSolution,
  DegenerateHessian,
  Overflow,
  EmptyInput,
  LimitSolveFailed,
  ParseError,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace imblr
