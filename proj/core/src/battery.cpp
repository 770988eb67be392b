#include "gexpect/battery.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <thread>

#include "gexpect/fuzz.hpp"

namespace gexpect {

namespace {

// Worst-case |u dM| over the M-sphere on one atom/child, in whitened
// coordinates: the Euclidean norm of b(c).
double max_jump_norm(const MartingaleBasis& basis) {
  const FilteredSpace& sp = basis.space();
  double worst = 0.0;
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const Node& parent = sp.node(k - 1, v);
      for (std::size_t j = 0; j < parent.children.size(); ++j) {
        double acc = 0.0;
        for (int i = 0; i < basis.active(k, v); ++i) {
          const double bi = basis.increment(k, v, static_cast<int>(j), i) /
                            std::sqrt(basis.phi(k, v, i));
          acc += bi * bi;
        }
        worst = std::max(worst, std::sqrt(acc));
      }
    }
  return worst;
}

int scaled(int n, double scale) { return std::max(1, static_cast<int>(n * scale)); }

struct WorstTracker {
  double value = 0.0;
  std::string witness;
  void update(double x, const std::string& w) {
    if (x > value) {
      value = x;
      witness = w;
    }
  }
  void merge(const WorstTracker& other) { update(other.value, other.witness); }
};

// Fuzzed catalog entry: a driver plus the r that certifies it (when any).
struct CatalogEntry {
  Driver driver;
  std::optional<RMatrix> r;
};

std::vector<CatalogEntry> fuzz_catalog(const MartingaleBasis& basis, Rng& rng,
                                       bool z_only = false) {
  std::vector<CatalogEntry> out;
  const double rho = balanced_scalar_rho(basis, rng.uniform(0.15, 0.8));
  const RMatrix r = RMatrix::scalar(rho);
  out.push_back({zero_driver(), RMatrix::scalar(rho)});
  out.push_back({r_norm_driver(basis, r, +1), r});
  out.push_back({r_norm_driver(basis, r, -1), r});
  std::vector<double> theta(basis.dim());
  for (auto& t : theta) t = rng.uniform(-1.0, 1.0);
  Driver lz = linear_z_driver(basis, theta);
  if (lz.lip_z > 0.0) {
    const double target = balanced_scalar_rho(basis, rng.uniform(0.2, 0.7));
    const double shrink = target / lz.lip_z;
    for (auto& t : theta) t *= shrink;
    lz = linear_z_driver(basis, theta);
  }
  out.push_back({lz, RMatrix::scalar(std::max(lz.lip_z, 1e-12))});
  if (!z_only) {
    out.push_back({linear_y_driver(rng.uniform(-0.6, 0.6)), std::nullopt});
    std::vector<std::vector<double>> table(basis.space().steps());
    for (int k = 1; k <= basis.space().steps(); ++k) {
      table[k - 1].resize(basis.space().node_count(k - 1));
      for (auto& x : table[k - 1]) x = rng.uniform(-0.5, 0.5);
    }
    out.push_back({table_driver(basis.space(), table), std::nullopt});
  }
  return out;
}

}  // namespace

double balanced_scalar_rho(const MartingaleBasis& basis, double fraction) {
  const double b = max_jump_norm(basis);
  return b > 0.0 ? fraction / b : fraction;
}

void parallel_trials(int n, int threads, const std::function<void(int)>& body) {
  int hw = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  hw = std::max(1, std::min(hw, n));
  if (hw == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < hw; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  for (auto& th : pool) th.join();
}

// --- criterion 1: BSDE residual over the catalog ---------------------------

void battery_bsde_residual(const BatteryOptions& opts, std::vector<Check>& out) {
  const auto start = std::chrono::steady_clock::now();
  const int n_spaces = scaled(200, opts.scale);
  std::vector<WorstTracker> residuals(n_spaces);
  parallel_trials(n_spaces, opts.threads, [&](int trial) {
    Rng rng = Rng::derive(opts.seed, 100 + trial);
    SpaceParams params;
    params.depth = rng.uniform_int(2, 6);
    params.branch_lo = 1;
    params.branch_hi = 3;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    for (auto& entry : fuzz_catalog(basis, rng)) {
      const RandomVariable q = random_payoff(sp, rng, -2.0, 2.0);
      const BsdeSolution sol = solve(basis, entry.driver, q);
      residuals[trial].update(sol.residual, entry.driver.name + " trial " +
                                                std::to_string(trial));
    }
  });
  WorstTracker worst;
  for (const auto& r : residuals) worst.merge(r);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Check c;
  c.name = "bsde_residual";
  c.pass = worst.value < 1e-10 && secs < 30.0;
  // measured seconds stay out of the info map so text reports remain
  // byte-stable; pass/fail carries the budget verdict
  c.with("max_residual", worst.value)
      .with("spaces", std::to_string(n_spaces))
      .with("runtime_under_30s", secs < 30.0 ? "yes" : "no");
  if (!worst.witness.empty()) c.with("worst", worst.witness);
  out.push_back(std::move(c));
}

// --- criterion 2: linear reduction ------------------------------------------

void battery_linear_reduction(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n = scaled(50, opts.scale);
  WorstTracker worst;
  for (int trial = 0; trial < n; ++trial) {
    Rng rng = Rng::derive(opts.seed, 200 + trial);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 6);
    params.branch_hi = 3;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const RandomVariable q = random_payoff(sp, rng, -2.0, 2.0);
    const BsdeSolution sol = solve(basis, zero_driver(), q);
    for (int k = 0; k <= sp.steps(); ++k) {
      const RandomVariable classical = conditional_expectation(sp, q, k);
      worst.update(max_abs_diff(sol.y.at[k], classical), "trial " + std::to_string(trial));
    }
  }
  Check c;
  c.name = "linear_reduction";
  c.pass = worst.value < 1e-12;
  c.with("max_deviation", worst.value).with("trials", std::to_string(n));
  out.push_back(std::move(c));
}

// --- criterion 3: martingale representation ---------------------------------

void battery_martingale_representation(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n = scaled(60, opts.scale);
  WorstTracker ortho, recon, gram;
  bool dims_ok = true, chain_ok = true;
  std::string dim_witness;
  for (int trial = 0; trial < n; ++trial) {
    Rng rng = Rng::derive(opts.seed, 300 + trial);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 5);
    params.branch_lo = 1;
    params.branch_hi = 4;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const int K = sp.steps();

    for (int i = 0; i < basis.dim(); ++i)
      for (int j = i + 1; j < basis.dim(); ++j) {
        double e = 0.0;
        for (int w = 0; w < sp.atoms(); ++w)
          e += sp.node(K, w).p * basis.martingale(i).at[K][w] * basis.martingale(j).at[K][w];
        ortho.update(std::fabs(e), "trial " + std::to_string(trial));
      }

    const AdaptedProcess nm = random_martingale(sp, rng, 2.0);
    const IntegrandVector z = represent(basis, nm);
    RandomVariable acc = constant_rv(sp, 0, nm.at[0][0]);
    for (int k = 1; k <= K; ++k) {
      const RandomVariable inc = stoch_integral(basis, z, 0, k);
      RandomVariable rebuilt{k, std::vector<double>(sp.node_count(k), 0.0)};
      for (int v = 0; v < sp.node_count(k); ++v) rebuilt[v] = nm.at[0][0] + inc[v];
      recon.update(max_abs_diff(rebuilt, nm.at[k]), "trial " + std::to_string(trial));
    }
    (void)acc;

    // per-node span: active count equals children - 1 and the conditional
    // Gram matrix of the increments is the identity (rank is exact)
    for (int k = 1; k <= K; ++k) {
      for (int v = 0; v < sp.node_count(k - 1); ++v) {
        const Node& parent = sp.node(k - 1, v);
        const int m = static_cast<int>(parent.children.size());
        if (basis.active(k, v) != m - 1) {
          dims_ok = false;
          dim_witness = "trial " + std::to_string(trial) + " step " + std::to_string(k);
        }
        for (int i = 0; i < basis.active(k, v); ++i)
          for (int j = 0; j < basis.active(k, v); ++j) {
            double gij = 0.0;
            for (int cpos = 0; cpos < m; ++cpos)
              gij += (sp.node(k, parent.children[cpos]).p / parent.p) *
                     basis.increment(k, v, cpos, i) * basis.increment(k, v, cpos, j);
            gram.update(std::fabs(gij - (i == j ? 1.0 : 0.0)),
                        "trial " + std::to_string(trial));
          }
        for (int i = 0; i + 1 < basis.dim(); ++i)
          if (basis.phi(k, v, i + 1) > 0.0 && !(basis.phi(k, v, i) > 0.0)) chain_ok = false;
      }
    }
  }
  Check c;
  c.name = "martingale_representation";
  c.pass = ortho.value < 1e-10 && recon.value < 1e-10 && gram.value < 1e-10 && dims_ok &&
           chain_ok;
  c.with("max_orthogonality", ortho.value)
      .with("max_reconstruction", recon.value)
      .with("max_gram_defect", gram.value)
      .with("span_dims_exact", dims_ok ? "yes" : "no")
      .with("qv_chain", chain_ok ? "yes" : "no");
  if (!dims_ok) c.with("dim_witness", dim_witness);
  out.push_back(std::move(c));
}

// --- criterion 4: comparison theorem ----------------------------------------

void battery_comparison(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n = scaled(100, opts.scale);
  std::vector<int> violated(n, 0), hypothesis_failed(n, 0), strict_failed(n, 0);
  parallel_trials(n, opts.threads, [&](int trial) {
    Rng rng = Rng::derive(opts.seed, 400 + trial);
    SpaceParams params;
    params.depth = rng.uniform_int(2, 5);
    params.branch_hi = 3;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const double rho = balanced_scalar_rho(basis, rng.uniform(0.3, 0.7));
    const RMatrix r = RMatrix::scalar(rho);
    const Driver base = r_norm_driver(basis, r, rng.next_double() < 0.5 ? +1 : -1);
    const int s = rng.uniform_int(0, sp.steps() - 1);

    const bool equality_seeded = trial % 5 == 4;
    if (equality_seeded) {
      // Q2 = Q on the subtree of one level-s node, lowered elsewhere.
      const RandomVariable q = random_payoff(sp, rng, -2.0, 2.0);
      const int pick = rng.uniform_int(0, sp.node_count(s) - 1);
      RandomVariable q2 = q;
      for (int w = 0; w < sp.atoms(); ++w)
        if (sp.ancestor(sp.steps(), w, s) != pick) q2[w] -= rng.uniform(0.0, 1.0);
      const CompareReport rep = compare(basis, base, q, base, q2, s, r, rng);
      if (rep.verdict == CompareReport::Verdict::Violated) violated[trial] = 1;
      if (rep.verdict == CompareReport::Verdict::HypothesisFails) hypothesis_failed[trial] = 1;
      if (!rep.strictness_ok) strict_failed[trial] = 1;
    } else {
      PredictableProcess offset;
      for (int k = 1; k <= sp.steps(); ++k) {
        RandomVariable o{k - 1, std::vector<double>(sp.node_count(k - 1), 0.0)};
        for (auto& x : o.values) x = rng.uniform(0.0, 0.4);
        offset.on_step.push_back(std::move(o));
      }
      const Driver g = offset_driver(base, offset);
      const RandomVariable q2 = random_payoff(sp, rng, -2.0, 2.0);
      RandomVariable q = q2;
      for (auto& x : q.values) x += rng.uniform(0.0, 1.0);
      const CompareReport rep = compare(basis, g, q, base, q2, s, r, rng);
      if (rep.verdict == CompareReport::Verdict::Violated) violated[trial] = 1;
      if (rep.verdict == CompareReport::Verdict::HypothesisFails) hypothesis_failed[trial] = 1;
      if (!rep.strictness_ok) strict_failed[trial] = 1;
    }
  });
  int nv = 0, nh = 0, ns = 0;
  for (int i = 0; i < n; ++i) {
    nv += violated[i];
    nh += hypothesis_failed[i];
    ns += strict_failed[i];
  }
  Check c;
  c.name = "comparison";
  c.pass = nv == 0 && nh == 0 && ns == 0;
  c.with("trials", std::to_string(n))
      .with("violations", std::to_string(nv))
      .with("hypothesis_failures", std::to_string(nh))
      .with("strictness_failures", std::to_string(ns));
  out.push_back(std::move(c));
}

// --- criterion 5: Doleans-Dade identities ------------------------------------

void battery_doleans(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n = scaled(100, opts.scale);
  double worst_defect = 0.0;  // must be exactly zero
  WorstTracker inversion, drift;
  bool positivity_ok = true;
  for (int trial = 0; trial < n; ++trial) {
    Rng rng = Rng::derive(opts.seed, 500 + trial);

    {  // jump-inversion identity on a fuzzed FV path
      const int steps = rng.uniform_int(1, 8);
      FVProcess nu;
      nu.values.push_back(0.0);
      for (int k = 1; k <= steps; ++k)
        nu.values.push_back(nu.values.back() + rng.uniform(0.0, 0.9));
      const FVProcess tilde = right_jump_inversion(nu);
      FVProcess neg;
      for (double x : nu.values) neg.values.push_back(-x);
      const auto e_neg = doleans_exponential_path(neg);
      const auto e_tilde = doleans_exponential_path(tilde);
      for (int k = 0; k <= steps; ++k)
        inversion.update(std::fabs(e_neg[k] * e_tilde[k] - 1.0),
                         "trial " + std::to_string(trial));
    }

    {  // exponential of a bounded-jump martingale on a fuzzed space
      SpaceParams params;
      params.depth = rng.uniform_int(1, 5);
      params.branch_hi = 3;
      const FilteredSpace sp = random_space(rng.next_u64(), params);
      AdaptedProcess nm = random_martingale(sp, rng, 1.0);
      // rescale so |dN| <= 0.9
      double mj = 0.0;
      for (int k = 1; k <= sp.steps(); ++k)
        for (int c2 = 0; c2 < sp.node_count(k); ++c2)
          mj = std::max(std::fabs(nm.at[k][c2] - nm.at[k - 1][sp.node(k, c2).parent]), mj);
      if (mj > 0.9)
        for (auto& rv : nm.at)
          for (auto& x : rv.values) x *= 0.9 / mj;

      const DoleansResult e = doleans_exponential(sp, nm);
      if (!e.positive) positivity_ok = false;
      // integral-equation defect, evaluated with the same expression
      for (int k = 1; k <= sp.steps(); ++k)
        for (int c2 = 0; c2 < sp.node_count(k); ++c2) {
          const int v = sp.node(k, c2).parent;
          const double m = e.value.at[k - 1][v];
          const double dn = nm.at[k][c2] - nm.at[k - 1][v];
          worst_defect = std::max(worst_defect, std::fabs(e.value.at[k][c2] - (m + m * dn)));
        }
      // martingale property of the exponential
      for (int k = 1; k <= sp.steps(); ++k) {
        const RandomVariable mean = conditional_expectation(sp, e.value.at[k], k - 1);
        drift.update(max_abs_diff(mean, e.value.at[k - 1]), "trial " + std::to_string(trial));
      }
    }
  }
  Check c;
  c.name = "doleans_identities";
  c.pass = worst_defect == 0.0 && inversion.value < 1e-12 && drift.value < 1e-10 &&
           positivity_ok;
  c.with("integral_equation_defect", worst_defect)
      .with("max_inversion_gap", inversion.value)
      .with("max_martingale_drift", drift.value)
      .with("positivity", positivity_ok ? "yes" : "no");
  out.push_back(std::move(c));
}

// --- criterion 6: backward Groenwall ----------------------------------------

void battery_gronwall(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n = scaled(100, opts.scale);
  WorstTracker excess, consistency;
  for (int trial = 0; trial < n; ++trial) {
    Rng rng = Rng::derive(opts.seed, 600 + trial);
    const int steps = rng.uniform_int(1, 8);
    FVProcess nu;
    nu.values.push_back(0.0);
    for (int k = 1; k <= steps; ++k)
      nu.values.push_back(nu.values.back() + rng.uniform(0.0, 0.9));
    const int t = rng.uniform_int(0, steps - 1);

    {  // constant alpha: equality-case recursion must meet the bound
      const double alpha = rng.uniform(0.1, 3.0);
      std::vector<double> u(steps + 1);
      u[steps] = alpha;
      double tail = 0.0;
      for (int k = steps - 1; k >= 0; --k) {
        tail += u[k + 1] * nu.jump(k + 1);
        u[k] = alpha + tail;
      }
      const double bound = gronwall_bound(alpha, nu, t);
      excess.update(u[t] - bound, "const trial " + std::to_string(trial));
      const double path_bound =
          gronwall_bound_path(std::vector<double>(steps + 1, alpha), nu, t);
      consistency.update(std::fabs(path_bound - bound) / (1.0 + std::fabs(bound)),
                         "trial " + std::to_string(trial));
    }
    {  // path alpha
      std::vector<double> alpha(steps + 1);
      for (auto& a : alpha) a = rng.uniform(0.1, 3.0);
      std::vector<double> u(steps + 1);
      u[steps] = alpha[steps];
      double tail = 0.0;
      for (int k = steps - 1; k >= 0; --k) {
        tail += u[k + 1] * nu.jump(k + 1);
        u[k] = alpha[k] + tail;
      }
      const double bound = gronwall_bound_path(alpha, nu, t);
      excess.update(u[t] - bound, "path trial " + std::to_string(trial));
    }
  }
  Check c;
  c.name = "gronwall";
  c.pass = excess.value <= 1e-12 && consistency.value <= 1e-12;
  c.with("max_bound_excess", excess.value).with("const_path_consistency", consistency.value);
  out.push_back(std::move(c));
}

// --- criterion 7: Doob-Meyer penalisation ------------------------------------

void battery_doob_meyer(const BatteryOptions& opts, std::vector<Check>& out) {
  // closed form on the one-step binary space
  {
    SpaceSpec spec;
    spec.times = {0.0, 1.0};
    spec.mu = {0.0, 1.0};
    spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
    spec.nodes.push_back({"u", std::string("n0"), 0.5});
    spec.nodes.push_back({"d", std::string("n0"), 0.5});
    const FilteredSpace sp = build_space(spec);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const Driver g = r_norm_driver(basis, RMatrix::scalar(0.5), +1);
    AdaptedProcess y;
    y.at.push_back(RandomVariable{0, {1.0}});
    y.at.push_back(RandomVariable{1, {1.0, -1.0}});
    const PenalizationTrace trace = penalized_sequence(basis, g, y);
    bool exact = trace.monotone;
    for (const auto& e : trace.entries)
      if (e.y0 != (0.5 + e.n) / (1.0 + e.n)) exact = false;
    Check c;
    c.name = "doob_meyer_closed_form";
    c.pass = exact;
    c.with("entries", std::to_string(trace.entries.size()))
        .with("final_gap", trace.entries.back().y_gap_sup);
    out.push_back(std::move(c));
  }

  const int n = scaled(20, opts.scale);
  WorstTracker y_gap, z_gap, a_gap, direct_da;
  bool monotone_ok = true, bounded_ok = true;
  for (int trial = 0; trial < n; ++trial) {
    Rng rng = Rng::derive(opts.seed, 700 + trial);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 4);
    params.branch_hi = 3;
    params.clock_lo = 0.25;
    params.clock_hi = std::min(0.5, 2.0 / params.depth);  // keeps mu_T <= 2
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const double rho = balanced_scalar_rho(basis, rng.uniform(0.3, 0.7));
    const Driver g = r_norm_driver(basis, RMatrix::scalar(rho), +1);

    // supermartingale = E_g-martingale minus a small predictable drift; the
    // drift is then exactly the compensator the decomposition must recover
    const RandomVariable q = random_payoff(sp, rng, -1.0, 1.0);
    const BsdeSolution mart = solve(basis, g, q);
    PredictableProcess delta;
    for (int k = 1; k <= sp.steps(); ++k) {
      RandomVariable dk{k - 1, std::vector<double>(sp.node_count(k - 1), 0.0)};
      for (auto& x : dk.values) x = rng.uniform(0.0, 0.02) * sp.grid().dmu(k);
      delta.on_step.push_back(std::move(dk));
    }
    AdaptedProcess y;
    y.at.push_back(mart.y.at[0]);
    RandomVariable d_acc = constant_rv(sp, 0, 0.0);
    for (int k = 1; k <= sp.steps(); ++k) {
      RandomVariable d_next{k, std::vector<double>(sp.node_count(k), 0.0)};
      for (int c2 = 0; c2 < sp.node_count(k); ++c2) {
        const int v = sp.node(k, c2).parent;
        d_next[c2] = d_acc[v] + delta.step(k)[v];
      }
      y.at.push_back(rv_sub(mart.y.at[k], d_next));
      d_acc = std::move(d_next);
    }

    const PenalizationTrace trace = penalized_sequence(basis, g, y);
    if (!trace.monotone) monotone_ok = false;
    if (!trace.bounded) bounded_ok = false;
    const auto& last = trace.entries.back();
    y_gap.update(last.y_gap_sup, "trial " + std::to_string(trial));
    a_gap.update(last.a_gap, "trial " + std::to_string(trial));
    // componentwise Z gap at schedule end
    double zg = 0.0;
    for (int k = 1; k <= sp.steps(); ++k)
      for (int v = 0; v < sp.node_count(k - 1); ++v)
        for (int i = 0; i < basis.dim(); ++i)
          zg = std::max(zg, std::fabs(trace.direct.z.at(k, v)[i] - trace.last.z.at(k, v)[i]));
    z_gap.update(zg, "trial " + std::to_string(trial));
    // the direct compensator must equal the manufactured drift
    for (int k = 1; k <= sp.steps(); ++k)
      direct_da.update(max_abs_diff(trace.direct.da.step(k), delta.step(k)),
                       "trial " + std::to_string(trial));
  }
  Check c;
  c.name = "doob_meyer_penalization";
  c.pass = monotone_ok && bounded_ok && y_gap.value < 1e-6 && z_gap.value < 1e-6 &&
           a_gap.value < 1e-6 && direct_da.value < 1e-10;
  c.with("monotone", monotone_ok ? "yes" : "no")
      .with("bounded", bounded_ok ? "yes" : "no")
      .with("max_y_gap", y_gap.value)
      .with("max_z_gap", z_gap.value)
      .with("max_a_gap", a_gap.value)
      .with("direct_vs_drift", direct_da.value);
  out.push_back(std::move(c));
}

// --- criterion 8: drift extraction -------------------------------------------

void battery_drift_extraction(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n = scaled(100, opts.scale);
  WorstTracker bound_gap, pair_gap;
  int failures = 0;
  for (int trial = 0; trial < n; ++trial) {
    Rng rng = Rng::derive(opts.seed, 800 + trial);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 5);
    params.branch_hi = 3;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const double rho = balanced_scalar_rho(basis, rng.uniform(0.25, 0.7));
    const RMatrix r = RMatrix::scalar(rho);
    const ErOracle oracle(basis, r, rng.next_double() < 0.5 ? +1 : -1);

    const AdaptedProcess y = oracle.cond_all(random_payoff(sp, rng, -2.0, 2.0));
    const AdaptedProcess y2 = oracle.cond_all(random_payoff(sp, rng, -2.0, 2.0));
    try {
      const DriftExtraction ex = drift_extract(basis, oracle, r, y);
      const DriftExtraction ex2 = drift_extract(basis, oracle, r, y2);
      bound_gap.update(ex.worst_bound_gap, "trial " + std::to_string(trial));
      bound_gap.update(ex2.worst_bound_gap, "trial " + std::to_string(trial));
      for (int k = 1; k <= sp.steps(); ++k)
        for (int v = 0; v < sp.node_count(k - 1); ++v) {
          std::vector<double> dz(basis.dim());
          for (int i = 0; i < basis.dim(); ++i)
            dz[i] = ex.z.at(k, v)[i] - ex2.z.at(k, v)[i];
          const double cap = r.apply_norm(basis, k, v, dz);
          pair_gap.update(
              std::fabs(ex.g_path.step(k)[v] - ex2.g_path.step(k)[v]) - cap,
              "trial " + std::to_string(trial));
        }
    } catch (const Error&) {
      ++failures;
    }
  }
  Check c;
  c.name = "drift_extraction";
  c.pass = failures == 0 && bound_gap.value <= 1e-10 && pair_gap.value <= 1e-10;
  c.with("trials", std::to_string(n))
      .with("failures", std::to_string(failures))
      .with("max_bound_gap", bound_gap.value)
      .with("max_pairwise_gap", pair_gap.value);
  out.push_back(std::move(c));
}

// --- criterion 9: representation round trip -----------------------------------

void battery_representation(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n_spaces = std::max(1, scaled(3, opts.scale));
  WorstTracker verify_dev, mode_dev, uniq_dev, lip_gap, g0;
  int audit_failures = 0, verify_failures = 0;
  for (int instance = 0; instance < n_spaces; ++instance) {
    Rng rng = Rng::derive(opts.seed, 900 + instance);
    SpaceParams params;
    params.depth = rng.uniform_int(2, 4);
    params.branch_hi = 3;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);

    for (auto& entry : fuzz_catalog(basis, rng, /*z_only=*/true)) {
      const RMatrix r = *entry.r;
      Rng cert_rng(rng.next_u64());
      const BalanceCertificate cert = check_balanced(basis, entry.driver, r, cert_rng);
      const GExpectationOracle oracle(basis, entry.driver, cert);

      RecoverOptions ropts;
      ropts.audit.samples = 40;
      ropts.audit.seed = rng.next_u64();
      ropts.seed = 77;  // shared priming grid across methods and seeds
      RecoveredDriver rec;
      try {
        rec = recover_driver(basis, oracle, r, ropts);
      } catch (const Error&) {
        ++audit_failures;
        continue;
      }
      const auto payoffs = default_verification_payoffs(sp, rng.next_u64(), scaled(100, opts.scale));
      const VerifyReport rep = verify_representation(basis, oracle, rec, payoffs, 1e-9);
      verify_dev.update(rep.max_deviation,
                        entry.driver.name + " instance " + std::to_string(instance));
      if (!rep.pass) ++verify_failures;
      lip_gap.update(rec.worst_lipschitz_gap(), entry.driver.name);
      g0.update(rec.g_at_zero(), entry.driver.name);

      // global pipeline must agree on the shared query grid
      RecoverOptions gopts = ropts;
      gopts.method = RecoveryMethod::Global;
      gopts.enforce_audit = false;  // same oracle, already audited above
      gopts.random_directions = 6;
      const RecoveredDriver rec_global = recover_driver(basis, oracle, r, gopts);
      const UniquenessReport modes = uniqueness_probe(rec, rec_global, 1e-8);
      mode_dev.update(modes.max_deviation, entry.driver.name);

      // a second one-step recovery from a disjoint random seed shares the
      // axis grid; recovered values there must coincide
      RecoverOptions uopts = ropts;
      uopts.enforce_audit = false;
      uopts.seed = 78;
      const RecoveredDriver rec2 = recover_driver(basis, oracle, r, uopts);
      const UniquenessReport uniq = uniqueness_probe(rec, rec2, 1e-10);
      uniq_dev.update(uniq.max_deviation, entry.driver.name);
    }
  }
  Check c;
  c.name = "representation_roundtrip";
  c.pass = audit_failures == 0 && verify_failures == 0 && verify_dev.value < 1e-9 &&
           mode_dev.value < 1e-8 && uniq_dev.value < 1e-10 && lip_gap.value <= 1e-8 &&
           g0.value <= 1e-12;
  c.with("max_verify_deviation", verify_dev.value)
      .with("mode_agreement", mode_dev.value)
      .with("uniqueness", uniq_dev.value)
      .with("lipschitz_gap", lip_gap.value)
      .with("g_at_zero", g0.value)
      .with("audit_failures", std::to_string(audit_failures))
      .with("verify_failures", std::to_string(verify_failures));
  out.push_back(std::move(c));
}

// --- criterion 10: negative control -------------------------------------------

void battery_negative_control(const BatteryOptions& opts, std::vector<Check>& out) {
  SpaceSpec spec;
  spec.times = {0.0, 1.0, 2.0};
  spec.mu = {0.0, 1.0, 2.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  spec.nodes.push_back({"u", std::string("n0"), std::nullopt});
  spec.nodes.push_back({"d", std::string("n0"), std::nullopt});
  spec.nodes.push_back({"uu", std::string("u"), 0.25});
  spec.nodes.push_back({"ud", std::string("u"), 0.25});
  spec.nodes.push_back({"du", std::string("d"), 0.25});
  spec.nodes.push_back({"dd", std::string("d"), 0.25});
  const FilteredSpace sp = build_space(spec);
  const MartingaleBasis basis = davis_varaiya_basis(sp);

  const WorstCaseStaticOracle oracle(
      sp, {{0.25, 0.25, 0.25, 0.25}, {0.3, 0.2, 0.2, 0.3}});
  const RMatrix r = RMatrix::scalar(balanced_scalar_rho(basis, 0.9));

  // the audit must reject it (tower fails)
  AxiomsOptions aopts;
  aopts.samples = 120;
  aopts.seed = opts.seed;
  const AxiomsReport audit = axioms_report(basis, oracle, r, aopts);
  const AxiomCheck* tower = audit.find("tower");
  const bool audit_rejects = !audit.all_required_pass() && tower && !tower->pass;

  // with the audit bypassed, verification must expose a concrete witness
  RecoverOptions ropts;
  ropts.enforce_audit = false;
  ropts.seed = opts.seed;
  const RecoveredDriver rec = recover_driver(basis, oracle, r, ropts);
  const auto payoffs = default_verification_payoffs(sp, opts.seed, 100);
  const VerifyReport rep = verify_representation(basis, oracle, rec, payoffs, 1e-9);
  const bool witnessed = !rep.pass && !rep.failures.empty() && rep.max_deviation > 1e-6;

  Check c;
  c.name = "negative_control";
  c.pass = audit_rejects && witnessed;
  c.with("audit_rejects", audit_rejects ? "yes" : "no")
      .with("tower_worst", tower ? tower->worst : -1.0)
      .with("verify_deviation", rep.max_deviation);
  if (!rep.failures.empty()) {
    c.with("witness_payoff", std::to_string(rep.failures.front().payoff_index))
        .with("witness_level", std::to_string(rep.failures.front().level))
        .with("witness_node", rep.failures.front().node);
  }
  out.push_back(std::move(c));
}

// --- criterion 11: bound checks -----------------------------------------------

void battery_bound_checks(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n = scaled(100, opts.scale);
  std::vector<int> violations(n, 0);
  std::vector<double> identity_devs(n, 0.0);
  parallel_trials(n, opts.threads, [&](int trial) {
    Rng rng = Rng::derive(opts.seed, 1100 + trial);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 5);
    params.branch_hi = 3;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const double rho = balanced_scalar_rho(basis, rng.uniform(0.2, 0.7));
    const RMatrix r = RMatrix::scalar(rho);
    const RandomVariable q = random_payoff(sp, rng, -2.0, 2.0);

    for (auto& entry : fuzz_catalog(basis, rng, /*z_only=*/true)) {
      const NormBoundReport nb = norm_bound_check(basis, entry.driver, q);
      if (!nb.identity_pass || !nb.bound_pass || !nb.lambda_positive) violations[trial] = 1;
      identity_devs[trial] =
          std::max(identity_devs[trial], std::fabs(nb.e_g - nb.girsanov_value));
    }
    const GrowthBoundReport gb =
        growth_bound_check(basis, r, q, rng.uniform_int(0, sp.steps() - 1));
    if (!gb.pass) violations[trial] = 1;
  });
  int nv = 0;
  double max_id = 0.0;
  for (int i = 0; i < n; ++i) {
    nv += violations[i];
    max_id = std::max(max_id, identity_devs[i]);
  }
  Check c;
  c.name = "bound_checks";
  c.pass = nv == 0 && max_id < 1e-10;
  c.with("trials", std::to_string(n))
      .with("violations", std::to_string(nv))
      .with("max_girsanov_gap", max_id);
  out.push_back(std::move(c));
}

// --- criterion 12: crossing inequalities ---------------------------------------

void battery_crossing_inequalities(const BatteryOptions& opts, std::vector<Check>& out) {
  const int n = scaled(50, opts.scale);
  int violations = 0;
  WorstTracker margin;
  for (int trial = 0; trial < n; ++trial) {
    Rng rng = Rng::derive(opts.seed, 1200 + trial);
    SpaceParams params;
    params.depth = rng.uniform_int(2, 5);
    params.branch_hi = 3;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const double rho = balanced_scalar_rho(basis, rng.uniform(0.2, 0.6));
    const RMatrix r = RMatrix::scalar(rho);
    const ErOracle er(basis, r, +1);

    // E^r-martingale plus a deterministic nondecreasing drift is an
    // E^r-submartingale
    AdaptedProcess y = er.cond_all(random_payoff(sp, rng, -1.5, 1.5));
    double drift = 0.0;
    for (int k = 0; k <= sp.steps(); ++k) {
      for (auto& x : y.at[k].values) x += drift;
      drift += rng.uniform(0.0, 0.3);
    }
    const double alpha = rng.uniform(-0.8, 0.2);
    const double beta = alpha + rng.uniform(0.2, 1.0);
    const CrossingInequalityReport rep =
        crossing_inequality_check(basis, r, y, alpha, beta);
    if (!rep.pass) ++violations;
    margin.update(std::max({rep.up_lhs - rep.up_rhs, rep.down_lhs - rep.down_mid,
                            rep.down_mid - rep.down_rhs}),
                  "trial " + std::to_string(trial));
  }
  Check c;
  c.name = "crossing_inequalities";
  c.pass = violations == 0;
  c.with("trials", std::to_string(n))
      .with("violations", std::to_string(violations))
      .with("worst_margin", margin.value);
  out.push_back(std::move(c));
}

Report run_suite(const BatteryOptions& opts) {
  Report report;
  report.command = "suite";
  report.seed = opts.seed;
  const auto start = std::chrono::steady_clock::now();
  battery_bsde_residual(opts, report.checks);
  battery_linear_reduction(opts, report.checks);
  battery_martingale_representation(opts, report.checks);
  battery_comparison(opts, report.checks);
  battery_doleans(opts, report.checks);
  battery_gronwall(opts, report.checks);
  battery_doob_meyer(opts, report.checks);
  battery_drift_extraction(opts, report.checks);
  battery_representation(opts, report.checks);
  battery_negative_control(opts, report.checks);
  battery_bound_checks(opts, report.checks);
  battery_crossing_inequalities(opts, report.checks);
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

}  // namespace gexpect
