#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gexpect/rmatrix.hpp"

namespace gexpect {

// ===========================================================================
// BSDE driver: an evaluable map (step k, node v, y, z) -> real together with
// the declared Lipschitz metadata the existence theorems consume. Bounds are
// declarations; check_standard audits them by sampling.
// ===========================================================================

struct Driver {
  using Eval = std::function<double(int k, int v, double y, std::span<const double> z)>;

  // Drivers of the form g0(z) + n (ypre - y)^+ with y-free g0 admit an exact
  // two-piece scalar resolution; the penalisation path relies on it.
  struct PenaltyForm {
    double n = 0.0;
    std::shared_ptr<const PredictableProcess> y_pre;
    Eval base;
  };

  Eval eval;
  std::string name;
  std::vector<double> lip_y;    // per-step bound on the y-Lipschitz constant (index k-1)
  double lip_z = 0.0;           // Lipschitz bound w.r.t. ||.||_{M_t}
  bool zero_at_zero = false;    // g(t, y, 0) = 0
  bool depends_on_y = true;
  bool smooth_in_y = true;      // enables Newton refinement in the scalar solve
  std::optional<PenaltyForm> penalty_form;

  double lip_y_at(int k) const {
    if (lip_y.empty()) return 0.0;
    return lip_y.size() == 1 ? lip_y[0] : lip_y[k - 1];
  }
  double lip_y_max() const {
    double m = 0.0;
    for (double c : lip_y) m = std::max(m, c);
    return m;
  }
  // Uniform quadratic Lipschitz constant c with |dg|^2 <= c(|dy|^2 + ||dz||^2).
  double quad_lipschitz() const {
    const double ly = lip_y_max();
    return std::max(ly * ly, lip_z * lip_z);
  }
};

// --- catalog -----------------------------------------------------------

Driver zero_driver();

// g(t, y, z) = a * y
Driver linear_y_driver(double a);

// g(t, y, z) = +/- ||r z||_{M_t}
Driver r_norm_driver(const MartingaleBasis& basis, const RMatrix& r, int sign = +1);

// g(t, y, z) = sum_i theta_i z_i  (theta padded/truncated to the basis dim)
Driver linear_z_driver(const MartingaleBasis& basis, std::vector<double> theta);

// g(t) from an explicit per-(step, node) table, independent of (y, z).
Driver table_driver(const FilteredSpace& sp, std::vector<std::vector<double>> values_per_step);

// f^n(t, y, z) = g(t, y, z) + n (Ypre_k(v) - y)^+ with Ypre the pre-jump path
// of the target supermartingale. The penalty is nonincreasing in y, so the
// scalar-extension existence applies whenever g itself is admissible.
Driver penalized_driver(const Driver& g, const PredictableProcess& y_pre, double n);

// g + offset(t) where offset is a nonnegative predictable table (used to
// manufacture ordered driver pairs for comparison tests).
Driver offset_driver(const Driver& g, const PredictableProcess& offset);

}  // namespace gexpect
