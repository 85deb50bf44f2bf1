#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smcf {

enum class ErrorCode {
  InvalidArgument,
  InvalidAxis,
  ZeroMode,
  GridMismatch,
  ScaleExceedsBox,
  EmptySeries,
  ValenceMismatch,
  Io,
  Transversality,
  ImmersionDegeneracy,
  ContractionFailure,
  NoConvergence,
  StepRejected,
  Blowup,
  IterationDivergence,
  FrameNotNormal,
  Integrability,
  FrameDrift,
  ReconstructionInconsistency,
  ConstraintViolation,
};

// Validation errors map to CLI exit code 2, numerical failures to 3 and
// constraint/integrability violations to 4.
enum class ErrorCategory { Validation, Numerical, Constraint };

ErrorCategory category(ErrorCode code);
std::string_view to_string(ErrorCode code);
int exit_code(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  ErrorCategory category() const { return smcf::category(code_); }
  const std::string& message() const { return message_; }  // without the code prefix

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace smcf
