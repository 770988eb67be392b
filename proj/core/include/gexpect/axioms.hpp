#pragma once

#include <optional>

#include "gexpect/expectation.hpp"
#include "gexpect/stochcalc.hpp"

namespace gexpect {

// ===========================================================================
// F-expectation axiom auditor, crossing inequalities and the bound checks.
// Audits are sampled (seeded) except where a property is checked on every
// node; failures carry a concrete witness.
// ===========================================================================

struct AxiomCheck {
  std::string name;
  bool pass = false;
  bool informational = false;  // reported but not required (e.g. additivity)
  double worst = 0.0;          // worst violation magnitude (0 when clean)
  std::string witness;
};

struct AxiomsReport {
  std::vector<AxiomCheck> checks;
  bool all_required_pass() const;
  const AxiomCheck* find(const std::string& name) const;
};

struct AxiomsOptions {
  int samples = 200;
  std::uint64_t seed = 1;
  double tol = 1e-10;
  bool check_domination = true;  // needs r
};

// Audits: strict monotonicity, constants, tower, local property (indicator
// pull-out), zero-one additivity over F_t partitions, translation invariance,
// convexity, positive homogeneity, full additivity (informational), and
// E^r-domination when r is supplied (two-sided, plus the sandwich
// E^-r <= E <= E^r for translation-invariant oracles).
AxiomsReport axioms_report(const MartingaleBasis& basis, const ExpectationOracle& oracle,
                           const std::optional<RMatrix>& r, const AxiomsOptions& opts = {});

// --- crossings --------------------------------------------------------------

struct CrossingCount {
  int up = 0;
  int down = 0;
};

// Crossing counts of a discrete path over [alpha, beta] on levels 0..up_to.
// BadInterval unless alpha < beta.
CrossingCount crossings(const std::vector<double>& path, double alpha, double beta, int up_to);

struct CrossingInequalityReport {
  double up_lhs = 0, up_rhs = 0;  // E^r(M) <= (b-a)^{-1}(E^r((Y_S-a)^+) - (Y_0-a)^+)
  double down_lhs = 0;            // E^r(D)
  double down_mid = 0;            // -(b-a)^{-1} E^r(-(Y_S-b)^+), reported only
  double down_rhs = 0;            // (b-a)^{-1} E^r((Y_S-b)^+), the asserted bound
  bool pass = false;
};

// Both crossing inequalities with E = E^r and S = the terminal level:
// the upcrossing bound and the downcrossing bound against the (Y_S-beta)^+
// term, plus the middle-vs-outer relation. NotSubmartingale if Y fails
// Y_s <= E^r(Y_t|F_s).
CrossingInequalityReport crossing_inequality_check(const MartingaleBasis& basis, const RMatrix& r,
                                                   const AdaptedProcess& y, double alpha,
                                                   double beta, double tol = 1e-10);

// --- bound checks -----------------------------------------------------------

struct NormBoundReport {
  double e_g = 0;          // E_g(Q)
  double girsanov_value = 0;  // E[Lambda_T Q]
  double c_eps = 0;        // ||Lambda_T||_{1+1/eps}
  double q_norm = 0;       // ||Q||_{1+eps}
  bool lambda_positive = true;
  bool identity_pass = false;   // |E_g(Q) - E[Lambda_T Q]| <= tol
  bool bound_pass = false;      // |E_g(Q)| <= C_eps ||Q||_{1+eps} + tol
};

// Builds Lambda_T = E( int (g/||Z||^2_M) Z dM ; T ) from the solved BSDE
// (0/0 = 0 where ||Z||_M vanishes) and checks the Girsanov identity and the
// Hoelder bound.
NormBoundReport norm_bound_check(const MartingaleBasis& basis, const Driver& driver,
                                 const RandomVariable& q, double eps = 1.0, double tol = 1e-10);

struct GrowthBoundReport {
  double lhs = 0;  // E[ E^r(Q|F_t)^2 ]
  double rhs = 0;  // E[Q^2] exp( sup ||r||_D^2 (mu_T - mu_t) )
  bool pass = false;
};

GrowthBoundReport growth_bound_check(const MartingaleBasis& basis, const RMatrix& r,
                                     const RandomVariable& q, int k, double tol = 1e-10);

}  // namespace gexpect
