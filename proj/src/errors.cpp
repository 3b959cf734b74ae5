#include "finslerlab/errors.hpp"

namespace finslerlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::OperandMismatch: return "OperandMismatch";
    case ErrorKind::DivisionNearZero: return "DivisionNearZero";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::OrderExceeded: return "OrderExceeded";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::EvaluationError: return "EvaluationError";
    case ErrorKind::ZeroSection: return "ZeroSection";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularMetric: return "SingularMetric";
    case ErrorKind::SprayMismatch: return "SprayMismatch";
    case ErrorKind::CrossCheckFailure: return "CrossCheckFailure";
    case ErrorKind::UnsupportedVariance: return "UnsupportedVariance";
    case ErrorKind::ZeroVelocity: return "ZeroVelocity";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::TargetZeroSection: return "TargetZeroSection";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

SyntaxError::SyntaxError(int position, const std::string& message)
    : Error(ErrorKind::SyntaxError, "at position " + std::to_string(position) + ": " + message),
      position_(position) {}

}  // namespace finslerlab
