#include "gexpect/stochcalc.hpp"

#include <cmath>
#include <limits>

#include "gexpect/report.hpp"

namespace gexpect {

DoleansResult doleans_exponential(const FilteredSpace& sp, const AdaptedProcess& n) {
  DoleansResult res;
  res.value.at.push_back(constant_rv(sp, 0, 1.0));
  for (int k = 1; k <= sp.steps(); ++k) {
    RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
    for (int c = 0; c < sp.node_count(k); ++c) {
      const int v = sp.node(k, c).parent;
      const double m = res.value.at[k - 1][v];
      const double dn = n.at[k][c] - n.at[k - 1][v];
      next[c] = m + m * dn;
      if (next[c] <= 0.0) res.positive = false;
    }
    res.value.at.push_back(std::move(next));
  }
  return res;
}

std::vector<double> doleans_exponential_path(const FVProcess& nu) {
  std::vector<double> e(nu.values.size());
  e[0] = 1.0;
  for (int k = 1; k <= nu.steps(); ++k) e[k] = e[k - 1] + e[k - 1] * nu.jump(k);
  return e;
}

FVProcess right_jump_inversion(const FVProcess& nu) {
  FVProcess out;
  out.values.resize(nu.values.size());
  out.values[0] = nu.values[0];
  for (int k = 1; k <= nu.steps(); ++k) {
    const double dn = nu.jump(k);
    if (dn >= 1.0)
      fail(ErrorCode::JumpTooLarge,
           "jump " + format_double(dn) + " at step " + std::to_string(k) + " is >= 1");
    out.values[k] = out.values[k - 1] + dn + dn * dn / (1.0 - dn);
  }
  return out;
}

namespace {
void require_admissible_nu(const FVProcess& nu) {
  for (int k = 1; k <= nu.steps(); ++k) {
    const double dn = nu.jump(k);
    if (dn >= 1.0)
      fail(ErrorCode::JumpTooLarge,
           "jump " + format_double(dn) + " at step " + std::to_string(k) + " is >= 1");
    if (dn < 0.0)
      fail(ErrorCode::JumpTooLarge, "nu must be nondecreasing (step " + std::to_string(k) + ")");
  }
}
}  // namespace

double gronwall_bound(double alpha, const FVProcess& nu, int t) {
  require_admissible_nu(nu);
  // E(-nu;t)/E(-nu;T) = prod_{t<s<=T} (1 - dnu_s)^{-1}
  double factor = 1.0;
  for (int k = t + 1; k <= nu.steps(); ++k) factor /= (1.0 - nu.jump(k));
  return alpha * factor;
}

double gronwall_bound_path(const std::vector<double>& alpha, const FVProcess& nu, int t) {
  require_admissible_nu(nu);
  const FVProcess tilde = right_jump_inversion(nu);
  // E(-nu;t) E(nu~;s-) = prod_{t<j<s} (1 - dnu_j)^{-1}, accumulated forward.
  double acc = 0.0;
  double left_prod = 1.0;  // value for s = t+1 (empty product)
  for (int k = t + 1; k <= nu.steps(); ++k) {
    acc += left_prod * alpha[k] * tilde.jump(k);
    left_prod /= (1.0 - nu.jump(k));
  }
  return alpha[t] + acc;
}

Measure girsanov(const FilteredSpace& sp, const RandomVariable& lambda_T, double tol) {
  if (lambda_T.level != sp.steps())
    fail(ErrorCode::LevelOrder, "density must live at the terminal level");
  Measure m;
  m.q.resize(sp.atoms());
  m.equivalent_to_p = true;
  double mean = 0.0;
  for (int w = 0; w < sp.atoms(); ++w) {
    if (lambda_T[w] < -tol)
      fail(ErrorCode::NotADensity, "negative density value " + format_double(lambda_T[w]));
    m.q[w] = sp.node(sp.steps(), w).p * lambda_T[w];
    mean += m.q[w];
    if (!(m.q[w] > 0.0)) m.equivalent_to_p = false;
  }
  if (std::fabs(mean - 1.0) > tol)
    fail(ErrorCode::NotADensity, "density has mean " + format_double(mean));
  return m;
}

double martingale_defect_under(const FilteredSpace& sp, const AdaptedProcess& x,
                               const Measure& measure) {
  const int K = sp.steps();
  // q-mass per node at each level
  std::vector<std::vector<double>> qnode(K + 1);
  qnode[K] = measure.q;
  for (int k = K - 1; k >= 0; --k) {
    qnode[k].assign(sp.node_count(k), 0.0);
    for (int v = 0; v < sp.node_count(k); ++v)
      for (int c : sp.node(k, v).children) qnode[k][v] += qnode[k + 1][c];
  }
  double defect = 0.0;
  for (int k = 1; k <= K; ++k) {
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      if (qnode[k - 1][v] <= 0.0) continue;  // q-null branch
      double mean = 0.0;
      for (int c : sp.node(k - 1, v).children) mean += qnode[k][c] * x.at[k][c];
      mean /= qnode[k - 1][v];
      defect = std::max(defect, std::fabs(mean - x.at[k - 1][v]));
    }
  }
  return defect;
}

bool is_martingale_under(const FilteredSpace& sp, const AdaptedProcess& x, const Measure& measure,
                         double tol) {
  return martingale_defect_under(sp, x, measure) <= tol;
}

AdaptedProcess quadratic_variation(const FilteredSpace& sp, const AdaptedProcess& n) {
  AdaptedProcess qv;
  qv.at.push_back(constant_rv(sp, 0, 0.0));
  for (int k = 1; k <= sp.steps(); ++k) {
    RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
    for (int c = 0; c < sp.node_count(k); ++c) {
      const int v = sp.node(k, c).parent;
      const double dn = n.at[k][c] - n.at[k - 1][v];
      next[c] = qv.at[k - 1][v] + dn * dn;
    }
    qv.at.push_back(std::move(next));
  }
  return qv;
}

PredictableProcess predictable_qv(const FilteredSpace& sp, const AdaptedProcess& n) {
  PredictableProcess comp;
  for (int k = 1; k <= sp.steps(); ++k) {
    RandomVariable x{k - 1, std::vector<double>(sp.node_count(k - 1), 0.0)};
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const Node& parent = sp.node(k - 1, v);
      double acc = 0.0;
      for (int c : parent.children) {
        const double dn = n.at[k][c] - n.at[k - 1][v];
        acc += (sp.node(k, c).p / parent.p) * dn * dn;
      }
      x[v] = acc;
    }
    comp.on_step.push_back(std::move(x));
  }
  return comp;
}

ExpMomentReport exp_moment_report(const FilteredSpace& sp, const AdaptedProcess& n, int p_max) {
  ExpMomentReport rep;
  const int K = sp.steps();
  const DoleansResult e_n = doleans_exponential(sp, n);
  rep.positive = true;
  for (int k = 1; k <= K; ++k)
    for (int c = 0; c < sp.node_count(k); ++c) {
      const double dn = n.at[k][c] - n.at[k - 1][sp.node(k, c).parent];
      if (std::fabs(dn) >= 1.0) rep.positive = false;
    }

  for (int p = 2; p <= p_max; p *= 2) {
    double acc = 0.0;
    for (int w = 0; w < sp.atoms(); ++w)
      acc += sp.node(K, w).p * std::pow(std::fabs(e_n.value.at[K][w]), p);
    rep.moments.emplace_back(p, acc);
  }

  // Auxiliary martingale 2N + [N] - <N> and the exact square identity.
  const AdaptedProcess bracket = quadratic_variation(sp, n);
  const PredictableProcess comp = predictable_qv(sp, n);
  AdaptedProcess tilde, two_n_bracket;
  tilde.at.push_back(constant_rv(sp, 0, 0.0));
  two_n_bracket.at.push_back(constant_rv(sp, 0, 0.0));
  double comp_running_max = 0.0;
  std::vector<double> comp_path(sp.node_count(0), 0.0);
  for (int k = 1; k <= K; ++k) {
    RandomVariable t_next{k, std::vector<double>(sp.node_count(k), 0.0)};
    RandomVariable b_next{k, std::vector<double>(sp.node_count(k), 0.0)};
    std::vector<double> comp_next(sp.node_count(k), 0.0);
    for (int c = 0; c < sp.node_count(k); ++c) {
      const int v = sp.node(k, c).parent;
      t_next[c] = 2.0 * n.at[k][c] + bracket.at[k][c] - (comp_path[v] + comp.step(k)[v]);
      b_next[c] = 2.0 * n.at[k][c] + bracket.at[k][c];
      comp_next[c] = comp_path[v] + comp.step(k)[v];
      comp_running_max = std::max(comp_running_max, comp_next[c]);
    }
    tilde.at.push_back(std::move(t_next));
    two_n_bracket.at.push_back(std::move(b_next));
    comp_path = std::move(comp_next);
  }
  const DoleansResult e_tilde = doleans_exponential(sp, tilde);
  const DoleansResult e_2nb = doleans_exponential(sp, two_n_bracket);

  const double ek = std::exp(comp_running_max);
  rep.identity_defect = 0.0;
  rep.pathwise_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= K; ++k)
    for (int c = 0; c < sp.node_count(k); ++c) {
      const double sq = e_n.value.at[k][c] * e_n.value.at[k][c];
      rep.identity_defect =
          std::max(rep.identity_defect, std::fabs(sq - e_2nb.value.at[k][c]));
      rep.pathwise_margin =
          std::min(rep.pathwise_margin, ek * e_tilde.value.at[k][c] - sq);
    }
  rep.expectation_lhs = 0.0;
  double e_tilde_mean = 0.0;
  for (int w = 0; w < sp.atoms(); ++w) {
    const double pw = sp.node(K, w).p;
    rep.expectation_lhs += pw * e_n.value.at[K][w] * e_n.value.at[K][w];
    e_tilde_mean += pw * e_tilde.value.at[K][w];
  }
  rep.expectation_rhs = ek * e_tilde_mean;
  return rep;
}

}  // namespace gexpect
