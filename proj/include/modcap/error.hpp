#pragma once

#include <stdexcept>
#include <string>

namespace modcap {

/// Failure categories. The numeric values of the first three match the CLI
/// exit-code contract.
enum class ErrorCode {
  invalid_input = 2,
  no_convergence = 3,
  certificate_failed = 4,
  io = 5,
  no_barycenter = 6,
  constant_curve = 7,
  cap_exceeded = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Exit code used by the command line front end for an error category.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::no_convergence:
      return 3;
    case ErrorCode::certificate_failed:
      return 4;
    default:
      return 2;
  }
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace modcap
