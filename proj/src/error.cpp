#include "rotator/error.hpp"

namespace rotator {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidParams: return "invalid_params";
    case ErrorCode::InvalidState: return "invalid_state";
    case ErrorCode::DivisionByZero: return "division_by_zero";
    case ErrorCode::NonRotatingState: return "non_rotating_state";
    case ErrorCode::NonFiniteEvaluation: return "non_finite_evaluation";
    case ErrorCode::DegenerateLegendreMap: return "degenerate_legendre_map";
    case ErrorCode::SignConditionViolated: return "sign_condition_violated";
    case ErrorCode::NonDegenerateSystem: return "non_degenerate_system";
    case ErrorCode::DegenerateSystem: return "degenerate_system";
    case ErrorCode::IndeterminateDynamics: return "indeterminate_dynamics";
    case ErrorCode::ConstraintViolatedAtStart: return "constraint_violated_at_start";
    case ErrorCode::ZeroDenominator: return "zero_denominator";
    case ErrorCode::UnsupportedDegenerateField: return "unsupported_degenerate_field";
    case ErrorCode::DomainExceeded: return "domain_exceeded";
    case ErrorCode::FrequencySignViolation: return "frequency_sign_violation";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::ValidationError: return "validation_error";
    case ErrorCode::IoError: return "io_error";
  }
  return "unknown";
}

std::string Error::diagnostic() const {
  std::string out = "error:";
  out += code_name(code_);
  out += ": ";
  out += what();
  return out;
}

}  // namespace rotator
