#pragma once

#include <span>
#include <string>
#include <vector>

#include "gexpect/space.hpp"

namespace gexpect {

// ===========================================================================
// Davis-Varaiya orthogonal martingale basis on a finite filtered space.
//
// Per predictable atom (node v at level k-1, step k) the increments of the
// basis martingales form an orthonormal family spanning the conditionally
// mean-zero subspace of R^{children(v)}; component i is active on v iff
// i < children(v) - 1. The global dimension d is the maximum over atoms.
// Increments are normalised to unit conditional second moment, so
// d<M^i>(v) = 1 on active components and phi^i(v) = 1 / dmu_k there.
// ===========================================================================

class MartingaleBasis {
 public:
  MartingaleBasis() = default;

  const FilteredSpace& space() const { return *space_; }
  int dim() const { return d_; }

  // Increment of M^i at step k on child position `c` (0-based within the
  // children of node v at level k-1).
  double increment(int k, int v, int c, int i) const {
    return inc_[k - 1][v][static_cast<std::size_t>(c) * d_ + i];
  }

  // d<M^i> over step k on the atom (node v at level k-1).
  double qv_increment(int k, int v, int i) const {
    return qv_[k - 1][static_cast<std::size_t>(v) * d_ + i];
  }

  // Density of <M^i> against mu x P on the atom; 0 on inactive components.
  double phi(int k, int v, int i) const {
    return phi_[k - 1][static_cast<std::size_t>(v) * d_ + i];
  }

  // Number of active components on the atom (= children - 1).
  int active(int k, int v) const { return active_[k - 1][v]; }

  // M^i as an adapted process (M^i_0 = 0).
  const AdaptedProcess& martingale(int i) const { return values_[i]; }

  // ||z||^2_{M_t} on the atom = sum_i z_i^2 phi^i. DimensionMismatch if
  // z.size() != dim().
  double m_norm_sq(int k, int v, std::span<const double> z) const;
  double m_norm(int k, int v, std::span<const double> z) const;

  // sum_i z_i dM^i on child position c of node v at step k.
  double pair_increment(int k, int v, int c, std::span<const double> z) const;

 private:
  friend MartingaleBasis davis_varaiya_basis(const FilteredSpace& sp);

  const FilteredSpace* space_ = nullptr;
  int d_ = 0;
  std::vector<std::vector<std::vector<double>>> inc_;  // [k-1][v] -> children x d
  std::vector<std::vector<double>> qv_;                // [k-1][v*d + i]
  std::vector<std::vector<double>> phi_;               // [k-1][v*d + i]
  std::vector<std::vector<int>> active_;               // [k-1][v]
  std::vector<AdaptedProcess> values_;                 // d processes
};

// Greedy per-atom orthogonalisation of child-indicator increments, canonical
// node order. The basis retains a reference to `sp`; keep the space alive.
MartingaleBasis davis_varaiya_basis(const FilteredSpace& sp);

// Predictable d-vector integrand: z[k-1][v*d + i].
struct IntegrandVector {
  int d = 0;
  std::vector<std::vector<double>> z;

  std::span<const double> at(int k, int v) const {
    return {z[k - 1].data() + static_cast<std::size_t>(v) * d, static_cast<std::size_t>(d)};
  }
  std::span<double> at(int k, int v) {
    return {z[k - 1].data() + static_cast<std::size_t>(v) * d, static_cast<std::size_t>(d)};
  }
};

IntegrandVector zero_integrand(const FilteredSpace& sp, int d);

// Kunita-Watanabe extraction: Z^i(v) = E[dN dM^i | v] / d<M^i>(v) where the
// quadratic variation increment is positive, 0 elsewhere. Checks the
// martingale property of N up to `martingale_tol` (NotAMartingale).
IntegrandVector represent(const MartingaleBasis& basis, const AdaptedProcess& n,
                          double martingale_tol = 1e-9);

// Same extraction for a single step: dev must be a level-k variable with
// E[dev | v] = 0 for every v at level k-1 (not checked).
void represent_step(const MartingaleBasis& basis, int k, const RandomVariable& dev,
                    IntegrandVector& out);

// Pathwise sum_{j=a+1..b} sum_i Z^i_j dM^i_j, a martingale increment.
RandomVariable stoch_integral(const MartingaleBasis& basis, const IntegrandVector& zv, int a,
                              int b);

struct IsometryReport {
  double lhs = 0;         // E[ int_A ||Z||^2_M dmu ]
  double rhs_qv = 0;      // E[ sum_i int_A (Z^i)^2 d<M^i> ]
  double rhs_square = 0;  // E[ ( int_A Z dM )^2 ]
  double max_gap() const;
};

// Evaluates the three expressions of the isometry; with a purely discrete
// clock all three agree.
IsometryReport isometry_check(const MartingaleBasis& basis, const IntegrandVector& zv,
                              const PredictableProcess& indicator);

// Structural report for golden-file tests: per-atom increments and densities.
std::string dump_basis(const MartingaleBasis& basis);

}  // namespace gexpect
