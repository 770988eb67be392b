#include "gexpect/errors.hpp"

namespace gexpect {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonRefining: return "NonRefining";
    case ErrorCode::NonIncreasingClock: return "NonIncreasingClock";
    case ErrorCode::ProbabilityMismatch: return "ProbabilityMismatch";
    case ErrorCode::ZeroProbabilityAtom: return "ZeroProbabilityAtom";
    case ErrorCode::LevelOrder: return "LevelOrder";
    case ErrorCode::ParamsOutOfRange: return "ParamsOutOfRange";
    case ErrorCode::NoStep: return "NoStep";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotAMartingale: return "NotAMartingale";
    case ErrorCode::JumpTooLarge: return "JumpTooLarge";
    case ErrorCode::NotADensity: return "NotADensity";
    case ErrorCode::MetadataMissing: return "MetadataMissing";
    case ErrorCode::RootFindFailure: return "RootFindFailure";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::DriverNotAdmissible: return "DriverNotAdmissible";
    case ErrorCode::RNotBalanced: return "RNotBalanced";
    case ErrorCode::BadInterval: return "BadInterval";
    case ErrorCode::NotSubmartingale: return "NotSubmartingale";
    case ErrorCode::NegativeCompensator: return "NegativeCompensator";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotEMartingale: return "NotEMartingale";
    case ErrorCode::BoundViolated: return "BoundViolated";
    case ErrorCode::OracleNotDominated: return "OracleNotDominated";
    case ErrorCode::OracleAuditFailed: return "OracleAuditFailed";
    case ErrorCode::DominationViolated: return "DominationViolated";
    case ErrorCode::ScenarioInvalid: return "ScenarioInvalid";
    case ErrorCode::CheckFailed: return "CheckFailed";
  }
  return "UnknownError";
}

}  // namespace gexpect
