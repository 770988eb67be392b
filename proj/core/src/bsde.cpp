#include "gexpect/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gexpect/report.hpp"

namespace gexpect {

namespace {

std::vector<double> random_z(Rng& rng, int d, double scale) {
  std::vector<double> z(d);
  for (auto& x : z) x = rng.uniform(-scale, scale);
  return z;
}

}  // namespace

StandardReport check_standard(const MartingaleBasis& basis, const Driver& driver, Rng& rng,
                              int samples) {
  if (driver.lip_y.empty())
    fail(ErrorCode::MetadataMissing, "driver '" + driver.name + "' declares no y-bound");
  const FilteredSpace& sp = basis.space();
  StandardReport rep;

  for (int k = 1; k <= sp.steps(); ++k) {
    const double ly = driver.lip_y_at(k);
    if (ly * ly * sp.grid().dmu(k) * sp.grid().dmu(k) >= 1.0) rep.offending_steps.push_back(k);
  }

  // Sampled audit of the declared constants and of the jump-monotonicity
  // condition used by the scalar extension.
  const double c = driver.quad_lipschitz();
  const double mono_bound = 1.0 - 1.0 / (1.0 + c);
  rep.worst_monotonicity_slack = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < samples; ++n) {
    const int k = rng.uniform_int(1, sp.steps());
    const int v = rng.uniform_int(0, sp.node_count(k - 1) - 1);
    const auto z = random_z(rng, basis.dim(), 2.0);
    auto z2 = random_z(rng, basis.dim(), 2.0);
    const double y = rng.uniform(-2.0, 2.0);
    const double y2 = rng.uniform(-2.0, 2.0);
    const double g_yz = driver.eval(k, v, y, z);
    const double g_y2z = driver.eval(k, v, y2, z);
    const double g_yz2 = driver.eval(k, v, y, z2);
    if (y != y2) {
      const double slope = (g_yz - g_y2z) / (y - y2);
      rep.audited_lip_y = std::max(rep.audited_lip_y, std::fabs(slope));
      rep.worst_monotonicity_slack =
          std::max(rep.worst_monotonicity_slack, slope * sp.grid().dmu(k) - mono_bound);
    }
    std::vector<double> dz(basis.dim());
    for (int i = 0; i < basis.dim(); ++i) dz[i] = z[i] - z2[i];
    const double dz_norm = basis.m_norm(k, v, dz);
    if (dz_norm > 1e-12)
      rep.audited_lip_z = std::max(rep.audited_lip_z, std::fabs(g_yz - g_yz2) / dz_norm);
  }
  rep.metadata_consistent = rep.audited_lip_y <= driver.lip_y_max() * (1.0 + 1e-9) + 1e-9 &&
                            rep.audited_lip_z <= driver.lip_z * (1.0 + 1e-9) + 1e-9;

  if (rep.offending_steps.empty()) {
    rep.classification = DriverClass::Standard;
  } else if (rep.worst_monotonicity_slack <= 1e-12) {
    rep.classification = DriverClass::ScalarExtensionOK;
  } else {
    rep.classification = DriverClass::Unsupported;
  }
  return rep;
}

namespace {

// Solves y - g(k, v, y, z) dmu = m for the pre-jump value. phi is strictly
// increasing and bi-Lipschitz for admissible drivers; bracketed bisection
// with secant acceleration is globally safe, Newton-like steps only shorten
// it. RootFindFailure reports observed non-monotonicity.
double scalar_solve(const MartingaleBasis& basis, const Driver& driver, int k, int v,
                    std::span<const double> z, double m, const SolveOptions& opts) {
  const double dmu = basis.space().grid().dmu(k);
  if (!driver.depends_on_y) return m + driver.eval(k, v, m, z) * dmu;

  if (driver.penalty_form.has_value()) {
    // y = m + g0(z) dmu + n dmu (ystar - y)^+ is piecewise linear in y with
    // slopes 1 and 1 + n dmu; exactly one branch is consistent.
    const auto& pf = *driver.penalty_form;
    const double ystar = pf.y_pre->step(k)[v];
    const double base = m + pf.base(k, v, 0.0, z) * dmu;
    if (base >= ystar) return base;
    return (base + pf.n * dmu * ystar) / (1.0 + pf.n * dmu);
  }

  auto phi = [&](double y) { return y - driver.eval(k, v, y, z) * dmu; };
  const double c = driver.quad_lipschitz();
  const double scale = 1.0 + std::fabs(m);

  double center = m + opts.root_perturb;
  double f_center = phi(center) - m;
  double radius = (1.0 + c) * std::fabs(f_center) + 1e-9 * scale;
  double lo = center - radius, hi = center + radius;
  double flo = phi(lo) - m, fhi = phi(hi) - m;
  int expansions = 0;
  while ((flo > 0.0 || fhi < 0.0) && expansions < 80) {
    radius *= 2.0;
    lo = center - radius;
    hi = center + radius;
    flo = phi(lo) - m;
    fhi = phi(hi) - m;
    ++expansions;
  }
  if (flo > 0.0 || fhi < 0.0)
    fail(ErrorCode::RootFindFailure,
         "could not bracket the pre-jump value at step " + std::to_string(k) + ", node " +
             std::to_string(v));
  if (flo > fhi + 1e-9 * scale)
    fail(ErrorCode::RootFindFailure, "phi is not increasing at step " + std::to_string(k) +
                                         ", node " + std::to_string(v) +
                                         " (driver metadata is wrong)");

  const double tol = opts.root_tol * scale;
  double y = center;
  for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
    // Secant proposal, clipped into the bracket; fall back to bisection.
    double cand = 0.5 * (lo + hi);
    if (driver.smooth_in_y && fhi != flo) {
      const double sec = lo - flo * (hi - lo) / (fhi - flo);
      if (sec > lo + 0.1 * (hi - lo) && sec < hi - 0.1 * (hi - lo)) cand = sec;
    }
    const double fc = phi(cand) - m;
    if (fc < 0.0) {
      if (fc < flo - 1e-9 * scale)
        fail(ErrorCode::RootFindFailure,
             "phi is not increasing at step " + std::to_string(k) + " (non-monotone interior)");
      lo = cand;
      flo = fc;
    } else {
      hi = cand;
      fhi = fc;
    }
    y = 0.5 * (lo + hi);
  }
  return y;
}

}  // namespace

BsdeSolution solve(const MartingaleBasis& basis, const Driver& driver, const RandomVariable& q,
                   const SolveOptions& opts) {
  const FilteredSpace& sp = basis.space();
  const int K = sp.steps();
  if (q.level != K) fail(ErrorCode::LevelOrder, "terminal value must live at level K");

  if (!opts.skip_classification && !driver.lip_y.empty() && driver.depends_on_y) {
    bool all_standard = true;
    for (int k = 1; k <= K; ++k) {
      const double ly = driver.lip_y_at(k);
      if (ly * ly * sp.grid().dmu(k) * sp.grid().dmu(k) >= 1.0) all_standard = false;
    }
    if (!all_standard) {
      // Only non-standard drivers pay for the sampled scalar-extension audit.
      Rng audit_rng(0xA5F00DULL);
      const StandardReport rep = check_standard(basis, driver, audit_rng);
      if (rep.classification == DriverClass::Unsupported)
        fail(ErrorCode::Unsupported,
             "driver '" + driver.name + "' violates the jump-monotonicity condition");
    }
  }

  BsdeSolution sol;
  sol.y.at.resize(K + 1);
  sol.y.at[K] = q;
  sol.z = zero_integrand(sp, basis.dim());
  sol.y_pre.on_step.resize(K);
  sol.g_realized.on_step.resize(K);

  for (int k = K; k >= 1; --k) {
    const RandomVariable mean = conditional_expectation(sp, sol.y.at[k], k - 1);
    const RandomVariable dev = rv_sub(sol.y.at[k], lift(sp, mean, k));
    represent_step(basis, k, dev, sol.z);

    RandomVariable pre{k - 1, std::vector<double>(sp.node_count(k - 1), 0.0)};
    RandomVariable gval{k - 1, std::vector<double>(sp.node_count(k - 1), 0.0)};
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const auto zk = sol.z.at(k, v);
      pre[v] = scalar_solve(basis, driver, k, v, zk, mean[v], opts);
      gval[v] = driver.eval(k, v, pre[v], zk);
    }

    // Pathwise defect of Y_k = Y_pre - g dmu + Z dM over the step.
    const double dmu = sp.grid().dmu(k);
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const Node& parent = sp.node(k - 1, v);
      const auto zk = sol.z.at(k, v);
      for (std::size_t j = 0; j < parent.children.size(); ++j) {
        const int ch = parent.children[j];
        const double recon =
            pre[v] - gval[v] * dmu + basis.pair_increment(k, v, static_cast<int>(j), zk);
        sol.residual = std::max(sol.residual, std::fabs(sol.y.at[k][ch] - recon));
      }
    }

    sol.y.at[k - 1] = pre;  // pre-jump values coincide on the parent atom
    sol.y_pre.on_step[k - 1] = std::move(pre);
    sol.g_realized.on_step[k - 1] = std::move(gval);
  }
  return sol;
}

// --- balance ---------------------------------------------------------------

namespace {

// Candidate value of ||D w|| |<b, w>| for a unit vector w.
double product_value(std::span<const double> rho, std::span<const double> b,
                     std::span<const double> w) {
  double nrm = 0.0, dot = 0.0, wn = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    nrm += rho[i] * rho[i] * w[i] * w[i];
    dot += b[i] * w[i];
    wn += w[i] * w[i];
  }
  if (wn <= 0.0) return 0.0;
  return std::sqrt(nrm / wn) * std::fabs(dot) / std::sqrt(wn);
}

// Exact sup over the unit sphere of ||diag(rho) w|| * |<b, w>|. All KKT
// points lie on two one-parameter families (see below); the sup is the best
// value over those families plus the coordinate and Cauchy-Schwarz points.
double diag_product_sup(std::span<const double> rho, std::span<const double> b) {
  const int n = static_cast<int>(rho.size());
  double best = 0.0;
  std::vector<double> w(n, 0.0);

  // coordinate points and the Cauchy-Schwarz point w ~ b
  for (int i = 0; i < n; ++i) {
    std::fill(w.begin(), w.end(), 0.0);
    w[i] = 1.0;
    best = std::max(best, product_value(rho, b, w));
  }
  best = std::max(best, product_value(rho, b, std::vector<double>(b.begin(), b.end())));

  // Family A: w_i = b_i / (tau - c_i) on b-active coordinates (c_i = rho_i^2),
  // zero elsewhere; tau sweeps the real line avoiding the poles.
  std::vector<int> act;
  double c_max = 0.0;
  for (int i = 0; i < n; ++i) {
    if (b[i] != 0.0) act.push_back(i);
    c_max = std::max(c_max, rho[i] * rho[i]);
  }
  if (act.empty()) return best;  // |<b, w>| = 0 identically

  auto family_a = [&](double tau) {
    std::fill(w.begin(), w.end(), 0.0);
    for (int i : act) {
      const double den = tau - rho[i] * rho[i];
      if (std::fabs(den) < 1e-14) return 0.0;
      w[i] = b[i] / den;
    }
    return product_value(rho, b, w);
  };
  // tau = c_max + span * t/(1-t) maps t in (0,1) onto (c_max, inf); the
  // mixed-sign stationary points below c_max are never maxima of a product
  // of nonnegative factors maximised by sign alignment, but sweep a symmetric
  // window below as well for safety.
  const double span = c_max + 1.0;
  const int grid_n = 4000;
  double best_tau = c_max + span;
  for (int j = 1; j < grid_n; ++j) {
    const double t = static_cast<double>(j) / grid_n;
    for (const double tau : {c_max + span * t / (1.0 - t), c_max - span * t / (1.0 - t)}) {
      const double val = family_a(tau);
      if (val > best) {
        best = val;
        best_tau = tau;
      }
    }
  }
  // golden-section refinement around the best tau
  double a = best_tau - span * 0.01, bb = best_tau + span * 0.01;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = bb - gr * (bb - a), x2 = a + gr * (bb - a);
  double f1 = family_a(x1), f2 = family_a(x2);
  for (int it = 0; it < 120; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (bb - a);
      f2 = family_a(x2);
    } else {
      bb = x2;
      x2 = x1;
      f2 = f1;
      x1 = bb - gr * (bb - a);
      f1 = family_a(x1);
    }
  }
  best = std::max({best, f1, f2});

  // Family B: mass alpha on a zero-b coordinate i0 (only the largest rho
  // matters), the rest along w_i = b_i / (c0 - c_i). The optimal alpha has a
  // closed form from d/d(alpha^2) = 0.
  int i0 = -1;
  for (int i = 0; i < n; ++i)
    if (b[i] == 0.0 && (i0 < 0 || rho[i] * rho[i] > rho[i0] * rho[i0])) i0 = i;
  if (i0 >= 0 && rho[i0] != 0.0) {
    const double c0 = rho[i0] * rho[i0];
    std::fill(w.begin(), w.end(), 0.0);
    bool ok = true;
    for (int i : act) {
      const double den = c0 - rho[i] * rho[i];
      if (std::fabs(den) < 1e-14) {
        ok = false;
        break;
      }
      w[i] = b[i] / den;
    }
    if (ok) {
      double wn = 0.0, qs = 0.0, s = 0.0;
      for (int i : act) {
        wn += w[i] * w[i];
        qs += rho[i] * rho[i] * w[i] * w[i];
        s += b[i] * w[i];
      }
      if (wn > 0.0) {
        qs /= wn;  // q along the unit direction
        const double denom = 2.0 * (c0 - qs);
        if (std::fabs(denom) > 1e-14) {
          double alpha2 = (c0 - 2.0 * qs) / denom;
          alpha2 = std::clamp(alpha2, 0.0, 1.0);
          const double beta = std::sqrt(1.0 - alpha2);
          std::vector<double> cand(n, 0.0);
          const double inv = beta / std::sqrt(wn);
          for (int i : act) cand[i] = w[i] * inv;
          cand[i0] = std::sqrt(alpha2);
          best = std::max(best, product_value(rho, b, cand));
        }
      }
    }
  }
  return best;
}

}  // namespace

double balance_sup_diagonal(const MartingaleBasis& basis, const RMatrix& r, int k, int v) {
  const FilteredSpace& sp = basis.space();
  const Node& parent = sp.node(k - 1, v);
  const int act = basis.active(k, v);
  if (act == 0) return 0.0;
  // Coordinates w_i = u_i sqrt(phi_i): the M-sphere becomes the unit sphere,
  // ||r u||_M = ||diag(rho) w|| and u dM(c) = <b(c), w>.
  std::vector<double> rho(act);
  for (int i = 0; i < act; ++i) rho[i] = std::fabs(r.diag_entry(k, i));
  double worst = 0.0;
  std::vector<double> b(act);
  for (std::size_t j = 0; j < parent.children.size(); ++j) {
    for (int i = 0; i < act; ++i)
      b[i] = basis.increment(k, v, static_cast<int>(j), i) / std::sqrt(basis.phi(k, v, i));
    worst = std::max(worst, diag_product_sup(rho, b));
  }
  return worst;
}

BalanceCertificate check_balanced(const MartingaleBasis& basis, const Driver& driver,
                                  const std::optional<RMatrix>& declared_r, Rng& rng,
                                  int samples) {
  const FilteredSpace& sp = basis.space();
  BalanceCertificate cert;

  if (driver.lip_z == 0.0 && !declared_r.has_value()) {
    // z-independent driver: the comparison ratio vanishes identically.
    cert.status = BalanceStatus::Balanced;
    cert.sup_product = 0.0;
    return cert;
  }

  if (declared_r.has_value()) {
    // The declared r must actually Lipschitz-dominate the driver's
    // z-increments; sample that link before certifying the r-product.
    for (int n = 0; n < samples; ++n) {
      const int k = rng.uniform_int(1, sp.steps());
      const int v = rng.uniform_int(0, sp.node_count(k - 1) - 1);
      const double y = rng.uniform(-2.0, 2.0);
      const auto z = random_z(rng, basis.dim(), 2.0);
      const auto z2 = random_z(rng, basis.dim(), 2.0);
      std::vector<double> dz(basis.dim());
      for (int i = 0; i < basis.dim(); ++i) dz[i] = z[i] - z2[i];
      const double dg = std::fabs(driver.eval(k, v, y, z) - driver.eval(k, v, y, z2));
      if (dg > declared_r->apply_norm(basis, k, v, dz) + 1e-9) {
        cert.status = BalanceStatus::NotCertified;
        cert.sampled = true;
        cert.witness = "driver increment escapes ||r dz||_M at step " + std::to_string(k) +
                       " node " + sp.node(k - 1, v).id;
        cert.sup_product = dg;
        return cert;
      }
    }
  }

  if (declared_r.has_value()) {
    const RMatrix& r = *declared_r;
    double sup = 0.0;
    std::string witness;
    for (int k = 1; k <= sp.steps(); ++k) {
      for (int v = 0; v < sp.node_count(k - 1); ++v) {
        double local;
        if (r.is_diagonal()) {
          local = balance_sup_diagonal(basis, r, k, v);
        } else {
          // conservative: ||r u||_M |u dM| <= ||r||_D max_c ||b(c)||
          const Node& parent = sp.node(k - 1, v);
          double bmax = 0.0;
          for (std::size_t j = 0; j < parent.children.size(); ++j) {
            double acc = 0.0;
            for (int i = 0; i < basis.active(k, v); ++i) {
              const double bi = basis.increment(k, v, static_cast<int>(j), i) /
                                std::sqrt(basis.phi(k, v, i));
              acc += bi * bi;
            }
            bmax = std::max(bmax, std::sqrt(acc));
          }
          local = r.dnorm(basis, k, v) * bmax;
          cert.conservative = true;
        }
        if (local > sup) {
          sup = local;
          witness = "step " + std::to_string(k) + " node " + sp.node(k - 1, v).id;
        }
      }
    }
    cert.sup_product = sup;
    cert.witness = witness;
    if (sup < 1.0) {
      cert.status = BalanceStatus::Balanced;
    } else if (!cert.conservative) {
      cert.status = BalanceStatus::NotCertified;
    } else {
      cert.status = BalanceStatus::Inconclusive;
    }
    return cert;
  }

  // No declared r: sample the comparison lemma's ratio
  //   |g(t,y,z) - g(t,y,z')| / ||z-z'||^2_M * |(z-z') dM|.
  cert.sampled = true;
  double worst = 0.0;
  std::string witness;
  for (int n = 0; n < samples; ++n) {
    const int k = rng.uniform_int(1, sp.steps());
    const int v = rng.uniform_int(0, sp.node_count(k - 1) - 1);
    const double y = rng.uniform(-2.0, 2.0);
    const auto z = random_z(rng, basis.dim(), 2.0);
    const auto z2 = random_z(rng, basis.dim(), 2.0);
    std::vector<double> dz(basis.dim());
    for (int i = 0; i < basis.dim(); ++i) dz[i] = z[i] - z2[i];
    const double dz_norm_sq = basis.m_norm_sq(k, v, dz);
    if (dz_norm_sq <= 1e-14) continue;
    const double dg = std::fabs(driver.eval(k, v, y, z) - driver.eval(k, v, y, z2));
    const Node& parent = sp.node(k - 1, v);
    for (std::size_t j = 0; j < parent.children.size(); ++j) {
      const double jump = basis.pair_increment(k, v, static_cast<int>(j), dz);
      const double ratio = dg / dz_norm_sq * std::fabs(jump);
      if (ratio > worst) {
        worst = ratio;
        witness = "step " + std::to_string(k) + " node " + parent.id;
      }
    }
  }
  cert.sup_product = worst;
  cert.witness = witness;
  cert.status = worst >= 1.0 ? BalanceStatus::NotCertified : BalanceStatus::Inconclusive;
  return cert;
}

// --- comparison ------------------------------------------------------------

CompareReport compare(const MartingaleBasis& basis, const Driver& g, const RandomVariable& q,
                      const Driver& g2, const RandomVariable& q2, int s,
                      const std::optional<RMatrix>& r_for_g, Rng& rng, double tol) {
  const FilteredSpace& sp = basis.space();
  CompareReport rep;
  rep.balance = check_balanced(basis, g, r_for_g, rng);

  const BsdeSolution sol = solve(basis, g, q);
  const BsdeSolution sol2 = solve(basis, g2, q2);

  for (int w = 0; w < sp.atoms(); ++w) {
    if (q[w] < q2[w] - tol) {
      rep.verdict = CompareReport::Verdict::HypothesisFails;
      rep.reason = "terminal values are not ordered at atom " + sp.node(sp.steps(), w).id;
      return rep;
    }
  }
  // Hypothesis (ii) is evaluated on the primed solution, as the theorem
  // states it.
  for (int k = s + 1; k <= sp.steps(); ++k) {
    for (int v = 0; v < sp.node_count(k - 1); ++v) {
      const auto z2 = sol2.z.at(k, v);
      const double yp = sol2.y_pre.step(k)[v];
      if (g.eval(k, v, yp, z2) < g2.eval(k, v, yp, z2) - tol) {
        rep.verdict = CompareReport::Verdict::HypothesisFails;
        rep.reason = "drivers are not ordered on the primed solution at step " +
                     std::to_string(k) + " node " + sp.node(k - 1, v).id;
        return rep;
      }
    }
  }

  rep.min_gap = std::numeric_limits<double>::infinity();
  for (int k = s; k <= sp.steps(); ++k) {
    for (int v = 0; v < sp.node_count(k); ++v) {
      const double gap = sol.y.at[k][v] - sol2.y.at[k][v];
      if (gap < rep.min_gap) rep.min_gap = gap;
      if (gap < -tol && rep.verdict != CompareReport::Verdict::Violated) {
        rep.verdict = CompareReport::Verdict::Violated;
        rep.witness = "level " + std::to_string(k) + " node " + sp.node(k, v).id;
      }
    }
  }
  if (rep.verdict != CompareReport::Verdict::Violated)
    rep.verdict = CompareReport::Verdict::Holds;

  // Strictness: wherever Y and Y' agree, they agree on the whole subtree.
  const double eq_tol = 1e-12;
  for (int k = s; k <= sp.steps() && rep.strictness_ok; ++k) {
    for (int v = 0; v < sp.node_count(k) && rep.strictness_ok; ++v) {
      if (std::fabs(sol.y.at[k][v] - sol2.y.at[k][v]) > eq_tol) continue;
      // walk descendants
      std::vector<int> frontier{v};
      for (int l = k + 1; l <= sp.steps() && rep.strictness_ok; ++l) {
        std::vector<int> next;
        for (int u : frontier)
          for (int c : sp.node(l - 1, u).children) {
            next.push_back(c);
            if (std::fabs(sol.y.at[l][c] - sol2.y.at[l][c]) > 10.0 * tol) {
              rep.strictness_ok = false;
              rep.strictness_witness = "equality at level " + std::to_string(k) + " node " +
                                       sp.node(k, v).id + " breaks at level " +
                                       std::to_string(l) + " node " + sp.node(l, c).id;
              break;
            }
          }
        frontier = std::move(next);
      }
    }
  }

  if (rep.balance.status != BalanceStatus::Balanced &&
      rep.balance.status != BalanceStatus::Inconclusive) {
    rep.verdict = CompareReport::Verdict::HypothesisFails;
    rep.reason = "balance certificate failed for the unprimed driver";
  }
  return rep;
}

}  // namespace gexpect
