#pragma once

#include <span>
#include <vector>

#include "gexpect/martingale.hpp"

namespace gexpect {

// ===========================================================================
// r-coefficient of an E^r expectation: per predictable atom a d x d operator
// acting on integrands, with the operator norm taken against the M-seminorm
// (the D-norm). Variants cover the scenario-file forms: a global scalar,
// per-step scalars, a diagonal, or a dense matrix shared across atoms.
// ===========================================================================

class RMatrix {
 public:
  static RMatrix scalar(double rho);
  static RMatrix by_step(std::vector<double> rho_per_step);  // size K
  static RMatrix diagonal(std::vector<double> rho_per_component);
  static RMatrix dense(int d, std::vector<double> row_major);

  // (r z) as a d-vector on the atom (step k, node v).
  std::vector<double> apply(const MartingaleBasis& basis, int k, int v,
                            std::span<const double> z) const;

  // ||r z||_{M} on the atom.
  double apply_norm(const MartingaleBasis& basis, int k, int v, std::span<const double> z) const;

  // D-norm on the atom: sup over ||u||_M = 1 of ||r u||_M, computed on the
  // active components.
  double dnorm(const MartingaleBasis& basis, int k, int v) const;

  // sup over atoms of the D-norm.
  double dnorm_sup(const MartingaleBasis& basis) const;

  bool is_scalar() const { return kind_ == Kind::Scalar || kind_ == Kind::ByStep; }
  bool is_diagonal() const { return kind_ != Kind::Dense; }
  double scalar_at(int k) const;  // valid for scalar / by_step kinds
  double diag_entry(int k, int i) const;  // valid for diagonal kinds

  int dense_dim() const { return dense_d_; }
  double dense_entry(int i, int j) const { return data_[i * dense_d_ + j]; }

 private:
  enum class Kind { Scalar, ByStep, Diag, Dense };
  Kind kind_ = Kind::Scalar;
  std::vector<double> data_;
  int dense_d_ = 0;
};

}  // namespace gexpect
