#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roughscatter {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidRatio,
  kDegenerate,
  kOrderViolation,
  kNotInLambda,
  kAsymmetricInput,
  kInfeasibleEpsilon,
  kDiscardRateExceeded,
  kBinningMismatch,
  kDoesNotFit,
  kEmptyCell,
  kSolverFailure,
  kZeroDenominator,
  kParse,
};

inline std::string_view error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kInvalidRatio: return "INVALID_RATIO";
    case ErrorCode::kDegenerate: return "DEGENERATE";
    case ErrorCode::kOrderViolation: return "ORDER_VIOLATION";
    case ErrorCode::kNotInLambda: return "NOT_IN_LAMBDA";
    case ErrorCode::kAsymmetricInput: return "ASYMMETRIC_INPUT";
    case ErrorCode::kInfeasibleEpsilon: return "INFEASIBLE_EPSILON";
    case ErrorCode::kDiscardRateExceeded: return "DISCARD_RATE_EXCEEDED";
    case ErrorCode::kBinningMismatch: return "BINNING_MISMATCH";
    case ErrorCode::kDoesNotFit: return "DOES_NOT_FIT";
    case ErrorCode::kEmptyCell: return "EMPTY_CELL";
    case ErrorCode::kSolverFailure: return "SOLVER_FAILURE";
    case ErrorCode::kZeroDenominator: return "ZERO_DENOMINATOR";
    case ErrorCode::kParse: return "PARSE_ERROR";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace roughscatter
