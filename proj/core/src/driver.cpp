#include "gexpect/driver.hpp"

#include <algorithm>
#include <cmath>

namespace gexpect {

Driver zero_driver() {
  Driver d;
  d.name = "zero";
  d.eval = [](int, int, double, std::span<const double>) { return 0.0; };
  d.lip_y = {0.0};
  d.lip_z = 0.0;
  d.zero_at_zero = true;
  d.depends_on_y = false;
  return d;
}

Driver linear_y_driver(double a) {
  Driver d;
  d.name = "linear_y";
  d.eval = [a](int, int, double y, std::span<const double>) { return a * y; };
  d.lip_y = {std::fabs(a)};
  d.lip_z = 0.0;
  d.zero_at_zero = false;  // depends on y, not admissible as a g-expectation
  d.depends_on_y = (a != 0.0);
  return d;
}

Driver r_norm_driver(const MartingaleBasis& basis, const RMatrix& r, int sign) {
  Driver d;
  d.name = sign >= 0 ? "r_norm" : "neg_r_norm";
  const double s = sign >= 0 ? 1.0 : -1.0;
  const MartingaleBasis* b = &basis;
  RMatrix rc = r;
  d.eval = [b, rc, s](int k, int v, double, std::span<const double> z) {
    return s * rc.apply_norm(*b, k, v, z);
  };
  d.lip_y = {0.0};
  d.lip_z = r.dnorm_sup(basis);
  d.zero_at_zero = true;
  d.depends_on_y = false;
  return d;
}

Driver linear_z_driver(const MartingaleBasis& basis, std::vector<double> theta) {
  Driver d;
  d.name = "linear_z";
  theta.resize(basis.dim(), 0.0);
  const MartingaleBasis* b = &basis;
  // components on dead basis directions are null in H^2_M; a well-defined
  // driver must not read them
  d.eval = [b, theta](int k, int v, double, std::span<const double> z) {
    double acc = 0.0;
    for (int i = 0; i < b->active(k, v); ++i) acc += theta[i] * z[i];
    return acc;
  };
  // |sum theta_i dz_i| <= sqrt(sum theta_i^2 / phi_i) ||dz||_M on each atom;
  // declare the sup over atoms (inactive components of dz are null in H^2_M).
  const FilteredSpace& sp = basis.space();
  double lz = 0.0;
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      double acc = 0.0;
      for (int i = 0; i < basis.active(k, v); ++i)
        acc += theta[i] * theta[i] / basis.phi(k, v, i);
      lz = std::max(lz, std::sqrt(acc));
    }
  d.lip_z = lz;
  d.lip_y = {0.0};
  d.zero_at_zero = true;
  d.depends_on_y = false;
  return d;
}

Driver table_driver(const FilteredSpace& sp, std::vector<std::vector<double>> values_per_step) {
  if (static_cast<int>(values_per_step.size()) != sp.steps())
    fail(ErrorCode::ScenarioInvalid, "table driver needs one row per step");
  for (int k = 1; k <= sp.steps(); ++k)
    if (static_cast<int>(values_per_step[k - 1].size()) != sp.node_count(k - 1))
      fail(ErrorCode::ScenarioInvalid,
           "table driver row " + std::to_string(k) + " has the wrong width");
  Driver d;
  d.name = "table";
  auto table = std::make_shared<std::vector<std::vector<double>>>(std::move(values_per_step));
  d.eval = [table](int k, int v, double, std::span<const double>) {
    return (*table)[k - 1][v];
  };
  d.lip_y = {0.0};
  d.lip_z = 0.0;
  d.zero_at_zero = false;
  d.depends_on_y = false;
  return d;
}

Driver penalized_driver(const Driver& g, const PredictableProcess& y_pre, double n) {
  Driver d;
  d.name = g.name + "+penalty";
  auto pre = std::make_shared<const PredictableProcess>(y_pre);
  Driver base = g;
  d.eval = [base, pre, n](int k, int v, double y, std::span<const double> z) {
    const double gap = pre->step(k)[v] - y;
    return base.eval(k, v, y, z) + (gap > 0.0 ? n * gap : 0.0);
  };
  d.lip_y.clear();
  for (std::size_t i = 0; i < std::max<std::size_t>(g.lip_y.size(), 1); ++i)
    d.lip_y.push_back((g.lip_y.empty() ? 0.0 : g.lip_y[i]) + n);
  d.lip_z = g.lip_z;
  d.zero_at_zero = false;
  d.depends_on_y = true;
  d.smooth_in_y = false;  // kink at y = Ypre
  if (!g.depends_on_y) d.penalty_form = Driver::PenaltyForm{n, pre, g.eval};
  return d;
}

Driver offset_driver(const Driver& g, const PredictableProcess& offset) {
  Driver d = g;
  d.name = g.name + "+offset";
  auto off = std::make_shared<PredictableProcess>(offset);
  Driver base = g;
  d.eval = [base, off](int k, int v, double y, std::span<const double> z) {
    return base.eval(k, v, y, z) + off->step(k)[v];
  };
  d.zero_at_zero = false;
  return d;
}

}  // namespace gexpect
