#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rotator {

enum class ErrorCode {
  InvalidArgument,
  InvalidParams,
  InvalidState,
  DivisionByZero,
  NonRotatingState,
  NonFiniteEvaluation,
  DegenerateLegendreMap,
  SignConditionViolated,
  NonDegenerateSystem,
  DegenerateSystem,
  IndeterminateDynamics,
  ConstraintViolatedAtStart,
  ZeroDenominator,
  UnsupportedDegenerateField,
  DomainExceeded,
  FrequencySignViolation,
  ParseError,
  ValidationError,
  IoError,
};

/// Stable snake_case identifier used in "error:<code>:" diagnostics.
std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Single-line form: "error:<code>: <message>".
  std::string diagnostic() const;

 private:
  ErrorCode code_;
};

}  // namespace rotator
