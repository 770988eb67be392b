#pragma once

#include <stdexcept>
#include <string>

namespace gexpect {

// Failure taxonomy shared across the library. Each code corresponds to a
// documented error of one operation; messages carry the concrete witness.
enum class ErrorCode {
  // space construction / queries
  NonRefining,
  NonIncreasingClock,
  ProbabilityMismatch,
  ZeroProbabilityAtom,
  LevelOrder,
  ParamsOutOfRange,
  NoStep,
  // martingale basis
  DimensionMismatch,
  NotAMartingale,
  // stochastic calculus
  JumpTooLarge,
  NotADensity,
  // BSDE
  MetadataMissing,
  RootFindFailure,
  Unsupported,
  // nonlinear expectations
  DriverNotAdmissible,
  RNotBalanced,
  BadInterval,
  NotSubmartingale,
  // Doob-Meyer
  NegativeCompensator,
  NoConvergence,
  NotEMartingale,
  BoundViolated,
  OracleNotDominated,
  // representation
  OracleAuditFailed,
  DominationViolated,
  // scenario / CLI
  ScenarioInvalid,
  CheckFailed,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace gexpect
