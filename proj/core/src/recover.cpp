#include "gexpect/recover.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

#include "gexpect/fuzz.hpp"
#include "gexpect/report.hpp"

namespace gexpect {

namespace {

std::string quantize_key(std::span<const double> z, int digits) {
  std::string key;
  char buf[48];
  for (double x : z) {
    if (std::fabs(x) < 0.5 * std::pow(10.0, -digits)) x = 0.0;  // merge -0
    std::snprintf(buf, sizeof(buf), "%.*e;", digits, x);
    key += buf;
  }
  return key;
}

}  // namespace

struct RecoveredDriver::State {
  const MartingaleBasis* basis = nullptr;
  const ExpectationOracle* oracle = nullptr;
  RMatrix r = RMatrix::scalar(0.0);
  RecoveryMethod method = RecoveryMethod::OneStep;
  double domination_tol = 1e-8;
  int quant_digits = 12;

  mutable std::mutex mutex;
  // quantised z -> per-step (k-1) node values; a step slot may be empty in
  // one-step mode until that step is queried.
  mutable std::map<std::string, std::vector<std::vector<double>>> memo;
  // bounded history of queried z per step for the pairwise certificate
  mutable std::vector<std::deque<std::vector<double>>> history;  // [k-1]
  mutable double worst_domination = -1e300;
  mutable double worst_lipschitz = -1e300;
  mutable double g_zero = 0.0;

  // one full-step recovery: g(z; k, .) for all atoms of level k-1
  std::vector<double> recover_step(int k, std::span<const double> z) const {
    const FilteredSpace& sp = basis->space();
    const double dmu = sp.grid().dmu(k);
    RandomVariable zdm{k, std::vector<double>(sp.node_count(k), 0.0)};
    for (int c = 0; c < sp.node_count(k); ++c) {
      const int v = sp.node(k, c).parent;
      int pos = -1;
      const Node& parent = sp.node(k - 1, v);
      for (std::size_t j = 0; j < parent.children.size(); ++j)
        if (parent.children[j] == c) pos = static_cast<int>(j);
      zdm[c] = basis->pair_increment(k, v, pos, z);
    }
    const RandomVariable e = oracle->cond(lift(sp, zdm, sp.steps()), k - 1);
    std::vector<double> g(sp.node_count(k - 1));
    for (int v = 0; v < sp.node_count(k - 1); ++v) g[v] = e[v] / dmu;
    return g;
  }

  // global pipeline: forward Y^z, dominated decomposition, drift extraction
  std::vector<std::vector<double>> recover_global(std::span<const double> z) const {
    const FilteredSpace& sp = basis->space();
    const int K = sp.steps();
    AdaptedProcess yz;
    yz.at.push_back(constant_rv(sp, 0, 0.0));
    for (int k = 1; k <= K; ++k) {
      RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
      for (int c = 0; c < sp.node_count(k); ++c) {
        const int v = sp.node(k, c).parent;
        int pos = -1;
        const Node& parent = sp.node(k - 1, v);
        for (std::size_t j = 0; j < parent.children.size(); ++j)
          if (parent.children[j] == c) pos = static_cast<int>(j);
        next[c] = yz.at[k - 1][v] - r.apply_norm(*basis, k, v, z) * sp.grid().dmu(k) +
                  basis->pair_increment(k, v, pos, z);
      }
      yz.at.push_back(std::move(next));
    }
    ErDomOptions opts;
    opts.schedule.clear();  // the limit object is exact; no trace needed here
    const ErDomResult dec = er_dom_decompose(*basis, *oracle, r, yz, opts);
    AdaptedProcess x;
    for (int k = 0; k <= K; ++k) x.at.push_back(rv_add(yz.at[k], dec.a.at[k]));
    const DriftExtraction ex = drift_extract(*basis, *oracle, r, x);
    std::vector<std::vector<double>> per_step(K);
    for (int k = 1; k <= K; ++k) per_step[k - 1] = ex.g_path.step(k).values;
    return per_step;
  }

  void certify(int k, std::span<const double> z, const std::vector<double>& g) const {
    const FilteredSpace& sp = basis->space();
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const double cap = r.apply_norm(*basis, k, v, z);
      const double gap = std::fabs(g[v]) - cap;
      worst_domination = std::max(worst_domination, gap);
      if (gap > domination_tol)
        fail(ErrorCode::DominationViolated,
             "recovered |g(z)| = " + format_double(std::fabs(g[v])) + " exceeds ||r z||_M = " +
                 format_double(cap) + " at step " + std::to_string(k) + " node " +
                 sp.node(k - 1, v).id);
    }
    // pairwise Lipschitz certificate against a bounded query history
    auto& hist = history[k - 1];
    for (const auto& zprev : hist) {
      std::vector<double> dz(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) dz[i] = z[i] - zprev[i];
      const auto gprev = lookup_step(k, zprev);
      if (gprev.empty()) continue;
      for (int v = 0; v < sp.node_count(k - 1); ++v) {
        const double cap = r.apply_norm(*basis, k, v, dz);
        worst_lipschitz = std::max(worst_lipschitz, std::fabs(g[v] - gprev[v]) - cap);
      }
    }
    hist.push_back(std::vector<double>(z.begin(), z.end()));
    if (hist.size() > 32) hist.pop_front();
  }

  std::vector<double> lookup_step(int k, std::span<const double> z) const {
    const auto it = memo.find(quantize_key(z, quant_digits));
    if (it == memo.end() || it->second[k - 1].empty()) return {};
    return it->second[k - 1];
  }

  const std::vector<double>& query(int k, std::span<const double> z) const {
    std::lock_guard<std::mutex> lock(mutex);
    const FilteredSpace& sp = basis->space();
    const std::string key = quantize_key(z, quant_digits);
    auto it = memo.find(key);
    if (it == memo.end())
      it = memo.emplace(key, std::vector<std::vector<double>>(sp.steps())).first;
    if (it->second[k - 1].empty()) {
      if (method == RecoveryMethod::Global) {
        auto all = recover_global(z);
        for (int kk = 1; kk <= sp.steps(); ++kk) {
          if (it->second[kk - 1].empty()) {
            certify(kk, z, all[kk - 1]);
            it->second[kk - 1] = std::move(all[kk - 1]);
          }
        }
      } else {
        auto g = recover_step(k, z);
        certify(k, z, g);
        it->second[k - 1] = std::move(g);
      }
      bool zero = true;
      for (double x : z)
        if (x != 0.0) zero = false;
      if (zero)
        for (double gv : it->second[k - 1]) g_zero = std::max(g_zero, std::fabs(gv));
    }
    return it->second[k - 1];
  }
};

double RecoveredDriver::eval(int k, int v, std::span<const double> z) const {
  return state_->query(k, z)[v];
}

Driver RecoveredDriver::as_driver() const {
  Driver d;
  d.name = "recovered";
  auto st = state_;
  d.eval = [st](int k, int v, double, std::span<const double> z) {
    return st->query(k, z)[v];
  };
  d.lip_y = {0.0};
  d.lip_z = state_->r.dnorm_sup(*state_->basis);
  d.zero_at_zero = true;
  d.depends_on_y = false;
  return d;
}

const RMatrix& RecoveredDriver::r() const { return state_->r; }
RecoveryMethod RecoveredDriver::method() const { return state_->method; }
double RecoveredDriver::worst_domination_gap() const { return state_->worst_domination; }
double RecoveredDriver::worst_lipschitz_gap() const { return state_->worst_lipschitz; }
double RecoveredDriver::g_at_zero() const { return state_->g_zero; }

std::map<std::string, std::vector<std::vector<double>>> RecoveredDriver::memo_snapshot() const {
  std::lock_guard<std::mutex> lock(state_->mutex);
  return state_->memo;
}

RecoveredDriver recover_driver(const MartingaleBasis& basis, const ExpectationOracle& oracle,
                               const RMatrix& r, const RecoverOptions& opts) {
  if (opts.enforce_audit) {
    const AxiomsReport audit = axioms_report(basis, oracle, r, opts.audit);
    if (!audit.all_required_pass()) {
      std::string failing;
      for (const auto& c : audit.checks)
        if (!c.informational && !c.pass) failing += (failing.empty() ? "" : ", ") + c.name;
      fail(ErrorCode::OracleAuditFailed, "oracle failed the F-expectation audit: " + failing);
    }
  }

  RecoveredDriver rec;
  rec.state_ = std::make_shared<RecoveredDriver::State>();
  auto& st = *rec.state_;
  st.basis = &basis;
  st.oracle = &oracle;
  st.r = r;
  st.method = opts.method;
  st.domination_tol = opts.domination_tol;
  st.quant_digits = opts.z_quant_digits;
  st.history.resize(basis.space().steps());

  // Priming grid: zero, axis points, seeded random directions.
  const int d = basis.dim();
  Rng rng(opts.seed);
  std::vector<std::vector<double>> grid;
  grid.push_back(std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i)
    for (double c : {1.0, -1.0, 2.0, -2.0}) {
      std::vector<double> z(d, 0.0);
      z[i] = c;
      grid.push_back(std::move(z));
    }
  for (int j = 0; j < opts.random_directions; ++j) {
    std::vector<double> z(d);
    for (auto& x : z) x = rng.uniform(-2.0, 2.0);
    grid.push_back(std::move(z));
  }
  for (int k = 1; k <= basis.space().steps(); ++k)
    for (const auto& z : grid) st.query(k, z);

  if (st.g_zero > 1e-12)
    fail(ErrorCode::OracleAuditFailed,
         "recovered g(0) = " + format_double(st.g_zero) + " does not vanish");
  return rec;
}

VerifyReport verify_representation(const MartingaleBasis& basis, const ExpectationOracle& oracle,
                                   const RecoveredDriver& rec,
                                   const std::vector<RandomVariable>& payoffs, double tol) {
  const FilteredSpace& sp = basis.space();
  VerifyReport rep;
  const Driver drv = rec.as_driver();
  for (std::size_t idx = 0; idx < payoffs.size(); ++idx) {
    const AdaptedProcess lhs = oracle.cond_all(payoffs[idx]);
    const BsdeSolution rhs = solve(basis, drv, payoffs[idx]);
    double worst = 0.0;
    int worst_level = -1, worst_node = -1;
    for (int k = 0; k <= sp.steps(); ++k) {
      for (int v = 0; v < sp.node_count(k); ++v) {
        const double dev = std::fabs(lhs.at[k][v] - rhs.y.at[k][v]);
        if (dev > worst) {
          worst = dev;
          worst_level = k;
          worst_node = v;
        }
      }
    }
    rep.max_deviation = std::max(rep.max_deviation, worst);
    if (worst > tol)
      rep.failures.push_back({static_cast<int>(idx), worst_level,
                              sp.node(worst_level, worst_node).id, worst});
  }
  rep.payoffs_checked = static_cast<int>(payoffs.size());
  rep.pass = rep.failures.empty();
  return rep;
}

std::vector<RandomVariable> default_verification_payoffs(const FilteredSpace& sp,
                                                         std::uint64_t seed, int n_random) {
  std::vector<RandomVariable> payoffs;
  const int K = sp.steps();
  const int n_ind = std::min(sp.atoms(), 16);
  for (int w = 0; w < n_ind; ++w) {
    RandomVariable ind{K, std::vector<double>(sp.atoms(), 0.0)};
    ind[w] = 1.0;
    payoffs.push_back(std::move(ind));
  }
  Rng rng(seed);
  for (int j = 0; j < n_random; ++j) payoffs.push_back(random_payoff(sp, rng, -2.0, 2.0));
  // classically centred at each intermediate level: matched conditional means
  for (int k = 0; k < K; ++k) {
    RandomVariable x = random_payoff(sp, rng, -2.0, 2.0);
    const RandomVariable centred =
        rv_sub(x, lift(sp, conditional_expectation(sp, x, k), K));
    payoffs.push_back(centred);
  }
  return payoffs;
}

UniquenessReport uniqueness_probe(const RecoveredDriver& rec, const RecoveredDriver& rec2,
                                  double tol) {
  const auto memo1 = rec.memo_snapshot();
  const auto memo2 = rec2.memo_snapshot();
  UniquenessReport rep;
  for (const auto& [key, steps1] : memo1) {
    const auto it = memo2.find(key);
    if (it == memo2.end()) continue;
    for (std::size_t k = 0; k < steps1.size(); ++k) {
      if (steps1[k].empty() || it->second[k].empty()) continue;
      ++rep.entries_compared;
      for (std::size_t v = 0; v < steps1[k].size(); ++v)
        rep.max_deviation = std::max(rep.max_deviation,
                                     std::fabs(steps1[k][v] - it->second[k][v]));
    }
  }
  rep.pass = rep.entries_compared > 0 && rep.max_deviation <= tol;
  return rep;
}

std::optional<double> experimental_search_scalar_r(const MartingaleBasis& basis,
                                                   const ExpectationOracle& oracle,
                                                   const AxiomsOptions& audit) {
  auto dominated_by = [&](double rho) {
    try {
      const RMatrix r = RMatrix::scalar(rho);
      AxiomsOptions opts = audit;
      const AxiomsReport rep = axioms_report(basis, oracle, r, opts);
      const AxiomCheck* dom = rep.find("domination");
      const AxiomCheck* sand = rep.find("sandwich");
      return dom && dom->pass && sand && sand->pass;
    } catch (const Error&) {
      return false;  // rho too large to stay uniformly balanced
    }
  };
  double hi = 1.0 / 16.0;
  bool found = false;
  for (int i = 0; i < 12; ++i) {
    if (dominated_by(hi)) {
      found = true;
      break;
    }
    hi *= 2.0;
  }
  if (!found) return std::nullopt;
  double lo = 0.0;
  for (int i = 0; i < 24; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (dominated_by(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace gexpect
