#pragma once

#include <stdexcept>
#include <string>

namespace latticelab {

enum class ErrorCode {
  NotNormalized,
  NonzeroMean,
  OneSidedSupport,
  Reducible,
  NoReturnFound,
  InfeasibleRecentering,
  Precondition,
  WindowTooSmall,
  MethodsDisagree,
  QuadratureSingularity,
  OutOfRange,
  NotConverged,
  LadderNotConverged,
  Disagreement,
  ExtrapolationUnstable,
  RoutesDisagree,
  XiNotInA,
  HorizonExceeded,
  ZeroEscapeMass,
  ContextIncomplete,
  RegimeViolation,
  ZeroDenominator,
  ConditionNull,
  ConfigError,
  IoFailure,
  UnknownFormula,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::Precondition, what);
}

}  // namespace latticelab
