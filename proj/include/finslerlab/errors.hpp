#pragma once

#include <stdexcept>
#include <string>

namespace finslerlab {

enum class ErrorKind {
  IndexOutOfRange,
  OperandMismatch,
  DivisionNearZero,
  DomainError,
  OrderExceeded,
  SingularMatrix,
  SyntaxError,
  UnknownVariable,
  EvaluationError,
  ZeroSection,
  NotPositiveDefinite,
  SingularMetric,
  SprayMismatch,
  CrossCheckFailure,
  UnsupportedVariance,
  ZeroVelocity,
  StepSizeUnderflow,
  TargetZeroSection,
  DimensionMismatch,
  SingularJacobian,
  ConfigError,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so that callers (the CLI
// in particular) can map it onto exit codes and report entries.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Position is a 1-based character offset into the parsed text.
class SyntaxError : public Error {
 public:
  SyntaxError(int position, const std::string& message);

  int position() const noexcept { return position_; }

 private:
  int position_;
};

}  // namespace finslerlab
