#pragma once

#include <vector>

#include "gexpect/martingale.hpp"
#include "gexpect/space.hpp"

namespace gexpect {

// ===========================================================================
// Pathwise stochastic calculus on the grid. Every process is purely
// discontinuous (the clock carries mass only at grid times), so continuous
// parts vanish and the Doleans-Dade exponential is a plain jump product.
// ===========================================================================

// A measure on the outcome set; equivalent to P iff every atom keeps mass.
struct Measure {
  std::vector<double> q;  // per terminal atom, canonical order
  bool equivalent_to_p = false;
};

// Deterministic cadlag finite-variation path on the grid. Jumps live at grid
// indices 1..K; the value at index 0 is the starting level.
struct FVProcess {
  std::vector<double> values;  // size K+1
  double jump(int k) const { return values[k] - values[k - 1]; }
  int steps() const { return static_cast<int>(values.size()) - 1; }
};

struct DoleansResult {
  AdaptedProcess value;
  bool positive = true;  // false iff some path hit a jump <= -1
};

// E(N;t_k) = prod_{j<=k} (1 + dN_j), computed through the integral-equation
// recurrence m += m * dN so the defining equation holds bit-exactly.
DoleansResult doleans_exponential(const FilteredSpace& sp, const AdaptedProcess& n);

// Deterministic version for FV paths.
std::vector<double> doleans_exponential_path(const FVProcess& nu);

// nu~_t = nu_t + sum (dnu)^2 / (1 - dnu); JumpTooLarge if some dnu >= 1.
// Satisfies E(-nu;t) E(nu~;t) = 1 at every grid point.
FVProcess right_jump_inversion(const FVProcess& nu);

// Backward Groenwall bound for u_t <= alpha + int_]t,T] u_s dnu_s with
// constant alpha: alpha * E(-nu;t) / E(-nu;T). Requires nu nondecreasing
// with jumps < 1.
double gronwall_bound(double alpha, const FVProcess& nu, int t);

// Path-alpha form: alpha_t + E(-nu;t) * sum_{k>t} E(nu~;t_{k-1}) alpha_k dnu~_k.
// The exponential enters at the left limit (predictable evaluation); with
// constant alpha this reproduces the closed form exactly.
double gronwall_bound_path(const std::vector<double>& alpha, const FVProcess& nu, int t);

// dQ/dP = Lambda_T; NotADensity unless Lambda_T >= 0 with mean 1.
Measure girsanov(const FilteredSpace& sp, const RandomVariable& lambda_T, double tol = 1e-10);

// Max conditional drift of X under the measure; martingale iff ~ 0. Nodes
// with zero q-mass are skipped (vacuous under the new measure).
double martingale_defect_under(const FilteredSpace& sp, const AdaptedProcess& x,
                               const Measure& measure);
bool is_martingale_under(const FilteredSpace& sp, const AdaptedProcess& x, const Measure& measure,
                         double tol = 1e-10);

// Pathwise quadratic variation [N]_t = sum (dN_s)^2.
AdaptedProcess quadratic_variation(const FilteredSpace& sp, const AdaptedProcess& n);

// Predictable compensator <N>: d<N>_k(v) = E[(dN_k)^2 | v].
PredictableProcess predictable_qv(const FilteredSpace& sp, const AdaptedProcess& n);

struct ExpMomentReport {
  std::vector<std::pair<int, double>> moments;  // (p, E[E(N;T)^p]) for p = 2^n <= p_max
  bool positive = true;                         // |dN| < 1 everywhere
  double identity_defect = 0;    // max | E^2(N;t) - E(2N+[N];t) | (exact discrete identity)
  double expectation_lhs = 0;    // E[E^2(N;T)]
  double expectation_rhs = 0;    // e^k E[E(2N+[N]-<N>;T)], k = max_omega <N>_T
  double pathwise_margin = 0;    // min over paths/times of e^k E(2N+[N]-<N>) - E^2(N)
};

// Moment table plus the square-exponential comparison. The discrete identity
// E^2(N) = E(2N+[N]) is exact; the e^k domination is asserted in expectation
// (the pathwise version fails when the compensator jumps, see the pathwise
// margin field).
ExpMomentReport exp_moment_report(const FilteredSpace& sp, const AdaptedProcess& n, int p_max);

}  // namespace gexpect
