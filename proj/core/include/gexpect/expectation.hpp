#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gexpect/bsde.hpp"

namespace gexpect {

// ===========================================================================
// Conditional nonlinear expectations E(.|F_t) as black boxes over one space.
// cond() takes a terminal variable and a target level; implementations must
// be pure (reentrant unless the capability flag says otherwise).
// ===========================================================================

class ExpectationOracle {
 public:
  virtual ~ExpectationOracle() = default;

  // Q must live at the terminal level.
  virtual RandomVariable cond(const RandomVariable& q, int level) const = 0;

  // All levels at once; overridden where one pass computes everything.
  virtual AdaptedProcess cond_all(const RandomVariable& q) const;

  virtual std::string provenance() const = 0;

  // Whether concurrent cond() calls are allowed.
  virtual bool reentrant() const { return true; }

  const FilteredSpace& space() const { return *space_; }

 protected:
  explicit ExpectationOracle(const FilteredSpace& sp) : space_(&sp) {}
  const FilteredSpace* space_;
};

// Classical conditional expectation under P.
class ClassicalOracle final : public ExpectationOracle {
 public:
  explicit ClassicalOracle(const FilteredSpace& sp) : ExpectationOracle(sp) {}
  RandomVariable cond(const RandomVariable& q, int level) const override;
  std::string provenance() const override { return "classical"; }
};

// g-expectation: E_g(Q|F_t) = Y_t of the BSDE with driver g. The driver must
// be balanced with g(t, y, 0) = 0 (DriverNotAdmissible otherwise); the
// balance certificate is supplied by the caller.
class GExpectationOracle final : public ExpectationOracle {
 public:
  GExpectationOracle(const MartingaleBasis& basis, Driver driver, BalanceCertificate cert);
  RandomVariable cond(const RandomVariable& q, int level) const override;
  AdaptedProcess cond_all(const RandomVariable& q) const override;
  std::string provenance() const override { return "g-expectation(" + driver_.name + ")"; }
  const Driver& driver() const { return driver_; }
  const MartingaleBasis& basis() const { return *basis_; }

 private:
  const MartingaleBasis* basis_;
  Driver driver_;
};

// E^r / E^{-r}: the g-expectation with driver +/- ||r z||_M. RNotBalanced if
// the certificate for r fails.
class ErOracle final : public ExpectationOracle {
 public:
  ErOracle(const MartingaleBasis& basis, RMatrix r, int sign);
  RandomVariable cond(const RandomVariable& q, int level) const override;
  AdaptedProcess cond_all(const RandomVariable& q) const override;
  std::string provenance() const override { return sign_ > 0 ? "E^r" : "E^-r"; }
  const RMatrix& r() const { return r_; }
  int sign() const { return sign_; }
  const MartingaleBasis& basis() const { return *basis_; }

 private:
  const MartingaleBasis* basis_;
  RMatrix r_;
  int sign_;
  Driver driver_;
};

// Linear expectation from a conditional-weight table: nested averages under
// per-node child weights (an arbitrary equivalent measure when weights differ
// from P).
class TableOracle final : public ExpectationOracle {
 public:
  // weights[level k-1 node v] = vector over children of v, positive, sums
  // free (normalised internally).
  TableOracle(const FilteredSpace& sp, std::vector<std::vector<std::vector<double>>> weights);
  RandomVariable cond(const RandomVariable& q, int level) const override;
  std::string provenance() const override { return "table"; }

 private:
  std::vector<std::vector<std::vector<double>>> w_;
};

// Negative control: a static worst case over a scenario set of measures,
// re-applied at each level. Monotone, constant-preserving and translation
// invariant, but NOT filtration consistent (the tower property fails), so
// recovery must be rejected by the audit and verification must expose it.
class WorstCaseStaticOracle final : public ExpectationOracle {
 public:
  // Each measure is a full-support terminal probability vector.
  WorstCaseStaticOracle(const FilteredSpace& sp, std::vector<std::vector<double>> measures);
  RandomVariable cond(const RandomVariable& q, int level) const override;
  std::string provenance() const override { return "worstcase_static"; }

 private:
  std::vector<std::vector<double>> measures_;
};

// --- module operations ----------------------------------------------------

// E_g(Q|F_{t_k}); demands zero_at_zero and a usable balance certificate.
RandomVariable g_expectation(const MartingaleBasis& basis, const Driver& driver,
                             const BalanceCertificate& cert, const RandomVariable& q, int k);

// E^{±r}(Q|F_{t_k}).
RandomVariable er_expectation(const MartingaleBasis& basis, const RMatrix& r,
                              const RandomVariable& q, int k, int sign);

}  // namespace gexpect
