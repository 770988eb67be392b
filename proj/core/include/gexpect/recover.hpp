#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "gexpect/axioms.hpp"
#include "gexpect/doobmeyer.hpp"

namespace gexpect {

// ===========================================================================
// Driver recovery: given a translation-invariant, E^r-dominated
// F-expectation, reconstruct the driver g of its BSDE representation from
// oracle queries and verify E = E_g exactly.
//
// One-step mode evaluates the defining identity over a single grid step:
//   g(z; k, atom) = E(z dM_k | F_{t_{k-1}})(atom) / dmu_k.
// Global mode runs the constructive pipeline (forward process, dominated
// Doob-Meyer decomposition, drift extraction) and must agree with it.
// ===========================================================================

enum class RecoveryMethod { OneStep, Global };

struct RecoverOptions {
  RecoveryMethod method = RecoveryMethod::OneStep;
  bool enforce_audit = true;   // negative controls bypass the gate on purpose
  AxiomsOptions audit;
  double domination_tol = 1e-8;
  int z_quant_digits = 12;     // memo key quantisation
  int random_directions = 20;  // priming queries per step
  std::uint64_t seed = 1;
};

class RecoveredDriver {
 public:
  // g(z; k, atom); ignores y by construction. Memoized; DominationViolated
  // when a queried value escapes ||r z||_M + tol.
  double eval(int k, int v, std::span<const double> z) const;

  // Adapter for the BSDE solver.
  Driver as_driver() const;

  const RMatrix& r() const;
  RecoveryMethod method() const;

  // Certificates accumulated over everything queried so far.
  double worst_domination_gap() const;  // max |g(z)| - ||r z||_M
  double worst_lipschitz_gap() const;   // max |g(z)-g(z')| - ||r (z-z')||_M
  double g_at_zero() const;             // recovered g(0), must vanish

  // Memo snapshot: quantised z key -> per-step node values. Used by the
  // uniqueness probe and by mode-agreement checks.
  std::map<std::string, std::vector<std::vector<double>>> memo_snapshot() const;

 private:
  friend RecoveredDriver recover_driver(const MartingaleBasis& basis,
                                        const ExpectationOracle& oracle, const RMatrix& r,
                                        const RecoverOptions& opts);
  struct State;
  std::shared_ptr<State> state_;
};

// OracleAuditFailed when the F-expectation audit rejects the oracle (unless
// opts.enforce_audit is off, which the negative-control path uses).
RecoveredDriver recover_driver(const MartingaleBasis& basis, const ExpectationOracle& oracle,
                               const RMatrix& r, const RecoverOptions& opts = {});

struct VerificationWitness {
  int payoff_index = -1;
  int level = -1;
  std::string node;
  double deviation = 0.0;
};

struct VerifyReport {
  double max_deviation = 0.0;
  bool pass = false;
  std::vector<VerificationWitness> failures;  // payoffs exceeding tol
  int payoffs_checked = 0;
};

// max_k |E(Q|F_k) - E_g(Q|F_k)| over the payoff battery; one BSDE solve with
// the recovered driver per payoff.
VerifyReport verify_representation(const MartingaleBasis& basis, const ExpectationOracle& oracle,
                                   const RecoveredDriver& rec,
                                   const std::vector<RandomVariable>& payoffs, double tol = 1e-9);

// Terminal-atom indicators, seeded random payoffs, and matched-conditional-
// mean payoffs (classically centred at intermediate levels, adversarial for
// nonlinearity).
std::vector<RandomVariable> default_verification_payoffs(const FilteredSpace& sp,
                                                         std::uint64_t seed, int n_random);

struct UniquenessReport {
  double max_deviation = 0.0;
  int entries_compared = 0;
  bool pass = false;
};

// Compares recovered values on the intersection of the two query sets.
UniquenessReport uniqueness_probe(const RecoveredDriver& rec, const RecoveredDriver& rec2,
                                  double tol = 1e-10);

// Experimental, no correctness claim: smallest scalar rho such that r = rho I
// passes the sampled domination audit.
std::optional<double> experimental_search_scalar_r(const MartingaleBasis& basis,
                                                   const ExpectationOracle& oracle,
                                                   const AxiomsOptions& audit);

}  // namespace gexpect
