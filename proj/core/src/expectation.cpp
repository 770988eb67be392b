#include "gexpect/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gexpect {

AdaptedProcess ExpectationOracle::cond_all(const RandomVariable& q) const {
  AdaptedProcess out;
  for (int k = 0; k <= space_->steps(); ++k) out.at.push_back(cond(q, k));
  return out;
}

RandomVariable ClassicalOracle::cond(const RandomVariable& q, int level) const {
  return conditional_expectation(*space_, q, level);
}

GExpectationOracle::GExpectationOracle(const MartingaleBasis& basis, Driver driver,
                                       BalanceCertificate cert)
    : ExpectationOracle(basis.space()), basis_(&basis), driver_(std::move(driver)) {
  if (!driver_.zero_at_zero)
    fail(ErrorCode::DriverNotAdmissible,
         "driver '" + driver_.name + "' does not satisfy g(t, y, 0) = 0");
  if (cert.status == BalanceStatus::NotCertified)
    fail(ErrorCode::DriverNotAdmissible,
         "driver '" + driver_.name + "' failed the balance certificate");
}

RandomVariable GExpectationOracle::cond(const RandomVariable& q, int level) const {
  return solve(*basis_, driver_, q).y.at[level];
}

AdaptedProcess GExpectationOracle::cond_all(const RandomVariable& q) const {
  return solve(*basis_, driver_, q).y;
}

ErOracle::ErOracle(const MartingaleBasis& basis, RMatrix r, int sign)
    : ExpectationOracle(basis.space()), basis_(&basis), r_(std::move(r)), sign_(sign) {
  Rng rng(0xE7);
  const Driver probe = r_norm_driver(basis, r_, +1);
  const BalanceCertificate cert = check_balanced(basis, probe, r_, rng);
  if (cert.status != BalanceStatus::Balanced)
    fail(ErrorCode::RNotBalanced, "r is not uniformly balanced (sup product " +
                                      std::to_string(cert.sup_product) + ")");
  driver_ = r_norm_driver(basis, r_, sign_);
}

RandomVariable ErOracle::cond(const RandomVariable& q, int level) const {
  return solve(*basis_, driver_, q).y.at[level];
}

AdaptedProcess ErOracle::cond_all(const RandomVariable& q) const {
  return solve(*basis_, driver_, q).y;
}

TableOracle::TableOracle(const FilteredSpace& sp,
                         std::vector<std::vector<std::vector<double>>> weights)
    : ExpectationOracle(sp), w_(std::move(weights)) {
  if (static_cast<int>(w_.size()) != sp.steps())
    fail(ErrorCode::ScenarioInvalid, "table oracle needs weights for every step");
  for (int k = 1; k <= sp.steps(); ++k) {
    if (static_cast<int>(w_[k - 1].size()) != sp.node_count(k - 1))
      fail(ErrorCode::ScenarioInvalid, "table oracle step " + std::to_string(k) +
                                           " has the wrong node count");
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const auto& row = w_[k - 1][v];
      if (row.size() != sp.node(k - 1, v).children.size())
        fail(ErrorCode::ScenarioInvalid, "table oracle weights do not match children");
      double total = 0.0;
      for (double x : row) {
        if (!(x > 0.0))
          fail(ErrorCode::ScenarioInvalid, "table oracle weights must be positive");
        total += x;
      }
      for (auto& x : w_[k - 1][v]) x /= total;
    }
  }
}

RandomVariable TableOracle::cond(const RandomVariable& q, int level) const {
  const FilteredSpace& sp = *space_;
  RandomVariable cur = q;
  for (int l = q.level; l > level; --l) {
    RandomVariable coarse{l - 1, std::vector<double>(sp.node_count(l - 1), 0.0)};
    for (int v = 0; v < sp.node_count(l - 1); ++v) {
      const Node& n = sp.node(l - 1, v);
      double acc = 0.0;
      for (std::size_t j = 0; j < n.children.size(); ++j)
        acc += w_[l - 1][v][j] * cur[n.children[j]];
      coarse[v] = acc;
    }
    cur = std::move(coarse);
  }
  return cur;
}

WorstCaseStaticOracle::WorstCaseStaticOracle(const FilteredSpace& sp,
                                             std::vector<std::vector<double>> measures)
    : ExpectationOracle(sp), measures_(std::move(measures)) {
  if (measures_.empty())
    fail(ErrorCode::ScenarioInvalid, "worst-case oracle needs at least one measure");
  for (const auto& m : measures_) {
    if (static_cast<int>(m.size()) != sp.atoms())
      fail(ErrorCode::ScenarioInvalid, "worst-case measure has the wrong atom count");
    for (double x : m)
      if (!(x > 0.0))
        fail(ErrorCode::ScenarioInvalid, "worst-case measures must have full support");
  }
}

RandomVariable WorstCaseStaticOracle::cond(const RandomVariable& q, int level) const {
  const FilteredSpace& sp = *space_;
  const int K = sp.steps();
  RandomVariable out{level, std::vector<double>(sp.node_count(level), 0.0)};
  for (int v = 0; v < sp.node_count(level); ++v)
    out[v] = std::numeric_limits<double>::infinity();
  for (const auto& m : measures_) {
    // conditional expectation of q under this measure
    std::vector<double> mass(sp.atoms());
    std::vector<double> acc(sp.atoms());
    for (int w = 0; w < sp.atoms(); ++w) {
      mass[w] = m[w];
      acc[w] = m[w] * q[w];
    }
    for (int l = K; l > level; --l) {
      std::vector<double> mass2(sp.node_count(l - 1), 0.0), acc2(sp.node_count(l - 1), 0.0);
      for (int c = 0; c < sp.node_count(l); ++c) {
        const int v = sp.node(l, c).parent;
        mass2[v] += mass[c];
        acc2[v] += acc[c];
      }
      mass = std::move(mass2);
      acc = std::move(acc2);
    }
    for (int v = 0; v < sp.node_count(level); ++v)
      out[v] = std::min(out[v], acc[v] / mass[v]);
  }
  return out;
}

RandomVariable g_expectation(const MartingaleBasis& basis, const Driver& driver,
                             const BalanceCertificate& cert, const RandomVariable& q, int k) {
  GExpectationOracle oracle(basis, driver, cert);
  return oracle.cond(q, k);
}

RandomVariable er_expectation(const MartingaleBasis& basis, const RMatrix& r,
                              const RandomVariable& q, int k, int sign) {
  ErOracle oracle(basis, r, sign);
  return oracle.cond(q, k);
}

}  // namespace gexpect
