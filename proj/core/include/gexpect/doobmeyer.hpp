#pragma once

#include "gexpect/expectation.hpp"

namespace gexpect {

// ===========================================================================
// Nonlinear Doob-Meyer decompositions. On a finite space the limit object is
// computable in one backward pass (decompose_direct); the penalisation
// scheme is retained as a verification artifact and must converge to it.
// ===========================================================================

struct Decomposition {
  double y0 = 0.0;
  IntegrandVector z;
  PredictableProcess da;      // increments of A (level k-1 per step), all >= 0
  AdaptedProcess a;           // accumulated A_t, A_0 = 0, predictable
  PredictableProcess g_path;  // realized driver values
  double reconstruction_defect = 0.0;  // Y_t = Y_0 - int g dmu - A_t + int Z dM
  double min_increment = 0.0;          // most negative dA encountered
};

struct SupermartingaleCheck {
  bool ok = true;
  std::string witness;  // first violating (s, t, node)
};

// Y_s >= E_g(Y_t | F_s) for every grid pair s <= t.
SupermartingaleCheck is_g_supermartingale(const MartingaleBasis& basis, const Driver& driver,
                                          const AdaptedProcess& y, double tol = 1e-10);

// One-pass exact oracle: Z from the martingale difference, then
// dA_k(v) = Y_{k-1}(v) - E[Y_k|v] - g(k, v, Y_{k-1}(v), Z) dmu_k.
// NegativeCompensator if some increment is below -1e-12.
Decomposition decompose_direct(const MartingaleBasis& basis, const Driver& driver,
                               const AdaptedProcess& y);

struct PenalizationEntry {
  double n = 0.0;
  double y0 = 0.0;
  double y_gap_sup = 0.0;  // ||Y - Y^n||_inf over all levels/nodes
  double z_gap = 0.0;      // E[int (Z - Z^n)^2 d<M>]
  double a_gap = 0.0;      // max |A_T - A^n_T|
  double a_t_sq = 0.0;     // E[(A^n_T)^2]
  double z_sq = 0.0;       // E[int (Z^n)^2 d<M>]
};

struct PenalizationTrace {
  std::vector<PenalizationEntry> entries;  // n = 0 first, then the schedule
  bool monotone = true;   // Y^0 <= Y^n <= Y^{n+1} <= Y pointwise at every n
  bool converged = false; // final sup gap < tol (reported, not fatal)
  bool bounded = true;    // A^n / Z^n second moments stay bounded on the way
  Decomposition direct;
  BsdeSolution last;      // solution at schedule end
  AdaptedProcess last_a;  // A^n at schedule end
};

std::vector<double> default_penalty_schedule();  // 1, 2, 4, ..., 2^16

// Solves the f^n-BSDEs with f^n = g + n (Y_{t-} - y)^+ along the schedule,
// stopping early once ||Y - Y^n||_inf < tol.
PenalizationTrace penalized_sequence(const MartingaleBasis& basis, const Driver& driver,
                                     const AdaptedProcess& y,
                                     std::vector<double> schedule = default_penalty_schedule(),
                                     double tol = 0.0);

struct DriftExtraction {
  PredictableProcess g_path;  // g_u(v) = (Y_{k-1}(v) - E[Y_k|v]) / dmu_k
  IntegrandVector z;
  double worst_bound_gap = 0.0;  // max |g_u| - ||r Z||_M over atoms
};

// For an E-martingale of an audited translation-invariant E^r-dominated
// oracle. NotEMartingale if Y_t != E(Y_T|F_t); BoundViolated if the induced
// drift escapes ||r Z||_M.
DriftExtraction drift_extract(const MartingaleBasis& basis, const ExpectationOracle& oracle,
                              const RMatrix& r, const AdaptedProcess& y, double tol = 1e-10);

struct ErDomOptions {
  std::vector<double> schedule = default_penalty_schedule();
  double tol = 1e-8;
  double fixed_point_tol = 1e-13;
  int max_oracle_queries_per_step = 10000;
};

struct ErDomEntry {
  double n = 0.0;
  double y_gap_sup = 0.0;
  double a_gap = 0.0;
};

struct ErDomResult {
  AdaptedProcess a;       // limiting compensator
  PredictableProcess da;
  double verification_defect = 0.0;  // max_k |Y_k + A_k - E(Y_T + A_T|F_k)|
  std::vector<ErDomEntry> trace;
  bool monotone = true;
  bool converged = true;
};

// Penalised oracle equations, solved per step by fixed point when n dmu is a
// contraction and by the translation-invariance closed form otherwise; the
// limiting A comes from the one-step oracle gaps and is verified through
// Y_t + A_t = E(Y_T + A_T | F_t). OracleNotDominated when that identity
// fails beyond tol.
ErDomResult er_dom_decompose(const MartingaleBasis& basis, const ExpectationOracle& oracle,
                             const RMatrix& r, const AdaptedProcess& y,
                             const ErDomOptions& opts = {});

}  // namespace gexpect
