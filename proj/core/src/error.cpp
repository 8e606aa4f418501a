#include "latticelab/error.hpp"

namespace latticelab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::NonzeroMean: return "NonzeroMean";
    case ErrorCode::OneSidedSupport: return "OneSidedSupport";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::NoReturnFound: return "NoReturnFound";
    case ErrorCode::InfeasibleRecentering: return "InfeasibleRecentering";
    case ErrorCode::Precondition: return "Precondition";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::MethodsDisagree: return "MethodsDisagree";
    case ErrorCode::QuadratureSingularity: return "QuadratureSingularity";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::LadderNotConverged: return "LadderNotConverged";
    case ErrorCode::Disagreement: return "Disagreement";
    case ErrorCode::ExtrapolationUnstable: return "ExtrapolationUnstable";
    case ErrorCode::RoutesDisagree: return "RoutesDisagree";
    case ErrorCode::XiNotInA: return "XiNotInA";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::ZeroEscapeMass: return "ZeroEscapeMass";
    case ErrorCode::ContextIncomplete: return "ContextIncomplete";
    case ErrorCode::RegimeViolation: return "RegimeViolation";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::ConditionNull: return "ConditionNull";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UnknownFormula: return "UnknownFormula";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace latticelab
