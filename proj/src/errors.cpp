#include "smcf/errors.hpp"

namespace smcf {

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidAxis:
    case ErrorCode::ZeroMode:
    case ErrorCode::GridMismatch:
    case ErrorCode::ScaleExceedsBox:
    case ErrorCode::EmptySeries:
    case ErrorCode::ValenceMismatch:
    case ErrorCode::Io:
    case ErrorCode::Transversality:
      return ErrorCategory::Validation;
    case ErrorCode::ImmersionDegeneracy:
    case ErrorCode::ContractionFailure:
    case ErrorCode::NoConvergence:
    case ErrorCode::StepRejected:
    case ErrorCode::Blowup:
    case ErrorCode::IterationDivergence:
      return ErrorCategory::Numerical;
    case ErrorCode::FrameNotNormal:
    case ErrorCode::Integrability:
    case ErrorCode::FrameDrift:
    case ErrorCode::ReconstructionInconsistency:
    case ErrorCode::ConstraintViolation:
      return ErrorCategory::Constraint;
  }
  return ErrorCategory::Validation;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidAxis: return "invalid-axis";
    case ErrorCode::ZeroMode: return "zero-mode";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::ScaleExceedsBox: return "scale-exceeds-box";
    case ErrorCode::EmptySeries: return "empty-series";
    case ErrorCode::ValenceMismatch: return "valence-mismatch";
    case ErrorCode::Io: return "io";
    case ErrorCode::Transversality: return "transversality";
    case ErrorCode::ImmersionDegeneracy: return "immersion-degeneracy";
    case ErrorCode::ContractionFailure: return "contraction-failure";
    case ErrorCode::NoConvergence: return "no-convergence";
    case ErrorCode::StepRejected: return "step-rejected";
    case ErrorCode::Blowup: return "blowup";
    case ErrorCode::IterationDivergence: return "iteration-divergence";
    case ErrorCode::FrameNotNormal: return "frame-not-normal";
    case ErrorCode::Integrability: return "integrability";
    case ErrorCode::FrameDrift: return "frame-drift";
    case ErrorCode::ReconstructionInconsistency: return "reconstruction-inconsistency";
    case ErrorCode::ConstraintViolation: return "constraint-violation";
  }
  return "unknown";
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Validation: return 2;
    case ErrorCategory::Numerical: return 3;
    case ErrorCategory::Constraint: return 4;
  }
  return 1;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace smcf
