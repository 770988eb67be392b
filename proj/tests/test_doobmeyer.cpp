#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gexpect/battery.hpp"
#include "gexpect/doobmeyer.hpp"
#include "gexpect/fuzz.hpp"

using namespace gexpect;
using namespace gexpect::testing;

namespace {

// E_g-supermartingale manufactured from a solved martingale minus a known
// predictable drift; the drift is the exact compensator.
struct Manufactured {
  AdaptedProcess y;
  PredictableProcess drift;
};

Manufactured make_supermartingale(const MartingaleBasis& basis, const Driver& g, Rng& rng,
                                  double drift_scale) {
  const FilteredSpace& sp = basis.space();
  const BsdeSolution mart = solve(basis, g, random_payoff(sp, rng, -1.0, 1.0));
  Manufactured out;
  for (int k = 1; k <= sp.steps(); ++k) {
    RandomVariable dk{k - 1, std::vector<double>(sp.node_count(k - 1), 0.0)};
    for (auto& x : dk.values) x = rng.uniform(0.0, drift_scale) * sp.grid().dmu(k);
    out.drift.on_step.push_back(std::move(dk));
  }
  out.y.at.push_back(mart.y.at[0]);
  RandomVariable acc = constant_rv(sp, 0, 0.0);
  for (int k = 1; k <= sp.steps(); ++k) {
    RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
    for (int c = 0; c < sp.node_count(k); ++c) {
      const int v = sp.node(k, c).parent;
      next[c] = acc[v] + out.drift.step(k)[v];
    }
    out.y.at.push_back(rv_sub(mart.y.at[k], next));
    acc = std::move(next);
  }
  return out;
}

}  // namespace

TEST_CASE("supermartingale detector") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  AdaptedProcess y;
  y.at.push_back(RandomVariable{0, {1.0}});
  y.at.push_back(RandomVariable{1, {1.0, -1.0}});
  CHECK(is_g_supermartingale(basis, zero_driver(), y).ok);

  AdaptedProcess bad;
  bad.at.push_back(RandomVariable{0, {-2.0}});
  bad.at.push_back(RandomVariable{1, {1.0, -1.0}});
  const SupermartingaleCheck chk = is_g_supermartingale(basis, zero_driver(), bad);
  CHECK_FALSE(chk.ok);
  CHECK_FALSE(chk.witness.empty());
}

TEST_CASE("direct decomposition: mean-gap example with the zero driver") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  AdaptedProcess y;
  y.at.push_back(RandomVariable{0, {1.0}});
  y.at.push_back(RandomVariable{1, {1.0, -1.0}});
  const Decomposition dec = decompose_direct(basis, zero_driver(), y);
  CHECK(std::fabs(dec.z.at(1, 0)[0]) == doctest::Approx(1.0));
  CHECK(dec.da.step(1)[0] == doctest::Approx(1.0));
  CHECK(dec.reconstruction_defect < 1e-14);
}

TEST_CASE("direct decomposition: norm driver shrinks the compensator") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const Driver g = r_norm_driver(basis, RMatrix::scalar(0.5), +1);
  AdaptedProcess y;
  y.at.push_back(RandomVariable{0, {1.0}});
  y.at.push_back(RandomVariable{1, {1.0, -1.0}});
  const Decomposition dec = decompose_direct(basis, g, y);
  CHECK(dec.da.step(1)[0] == doctest::Approx(0.5));
}

TEST_CASE("an E_g-martingale has a vanishing compensator") {
  Rng rng(5);
  SpaceParams params;
  params.depth = 3;
  const FilteredSpace sp = random_space(rng.next_u64(), params);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const Driver g = r_norm_driver(basis, RMatrix::scalar(balanced_scalar_rho(basis, 0.5)), +1);
  const BsdeSolution sol = solve(basis, g, random_payoff(sp, rng));
  const Decomposition dec = decompose_direct(basis, g, sol.y);
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v)
      CHECK(std::fabs(dec.da.step(k)[v]) < 1e-12);
}

TEST_CASE("non-supermartingales are rejected with NegativeCompensator") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  AdaptedProcess y;
  y.at.push_back(RandomVariable{0, {-1.0}});
  y.at.push_back(RandomVariable{1, {1.0, -1.0}});
  CHECK_THROWS_AS((void)decompose_direct(basis, zero_driver(), y), Error);
}

TEST_CASE("penalised values on the worked one-step example") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const Driver g = r_norm_driver(basis, RMatrix::scalar(0.5), +1);
  AdaptedProcess y;
  y.at.push_back(RandomVariable{0, {1.0}});
  y.at.push_back(RandomVariable{1, {1.0, -1.0}});
  const PenalizationTrace trace = penalized_sequence(basis, g, y, {1.0, 3.0});
  REQUIRE(trace.entries.size() == 3);  // n = 0, 1, 3
  CHECK(trace.entries[0].y0 == doctest::Approx(0.5));
  CHECK(trace.entries[1].y0 == doctest::Approx(0.75));
  CHECK(trace.entries[2].y0 == doctest::Approx(0.875));
  CHECK(trace.monotone);
}

TEST_CASE("penalisation leaves an E_g-martingale untouched") {
  Rng rng(6);
  SpaceParams params;
  params.depth = 2;
  const FilteredSpace sp = random_space(rng.next_u64(), params);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const Driver g = r_norm_driver(basis, RMatrix::scalar(balanced_scalar_rho(basis, 0.4)), +1);
  const BsdeSolution sol = solve(basis, g, random_payoff(sp, rng));
  const PenalizationTrace trace = penalized_sequence(basis, g, sol.y, {1.0, 16.0, 256.0});
  for (const auto& e : trace.entries) {
    CHECK(e.y_gap_sup < 1e-10);
    CHECK(e.a_gap < 1e-6);
  }
}

TEST_CASE("penalised sequence converges monotonically to the direct limit") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 3);
    params.clock_lo = 0.3;
    params.clock_hi = 0.6;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const Driver g =
        r_norm_driver(basis, RMatrix::scalar(balanced_scalar_rho(basis, 0.4)), +1);
    const Manufactured made = make_supermartingale(basis, g, rng, 0.05);
    const PenalizationTrace trace = penalized_sequence(basis, g, made.y);
    CHECK(trace.monotone);
    CHECK(trace.bounded);
    CHECK(trace.converged);
    CHECK(trace.entries.back().y_gap_sup < 1e-5);
    // the direct compensator recovers the manufactured drift exactly
    for (int k = 1; k <= sp.steps(); ++k)
      CHECK(max_abs_diff(trace.direct.da.step(k), made.drift.step(k)) < 1e-10);
    // decreasing gap along the schedule
    for (std::size_t i = 1; i < trace.entries.size(); ++i)
      CHECK(trace.entries[i].y_gap_sup <= trace.entries[i - 1].y_gap_sup + 1e-12);
  }
}

TEST_CASE("corollary split: the martingale part is an E_g-martingale") {
  Rng rng(11);
  SpaceParams params;
  params.depth = 3;
  const FilteredSpace sp = random_space(rng.next_u64(), params);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const Driver g = r_norm_driver(basis, RMatrix::scalar(balanced_scalar_rho(basis, 0.4)), +1);
  const Manufactured made = make_supermartingale(basis, g, rng, 0.1);
  const Decomposition dec = decompose_direct(basis, g, made.y);
  // M_t = -int g dmu + int Z dM solves the BSDE with terminal M_T
  AdaptedProcess m;
  m.at.push_back(constant_rv(sp, 0, 0.0));
  for (int k = 1; k <= sp.steps(); ++k) {
    RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
    const RandomVariable integral = stoch_integral(basis, dec.z, 0, k);
    const RandomVariable integral_prev = stoch_integral(basis, dec.z, 0, k - 1);
    for (int c = 0; c < sp.node_count(k); ++c) {
      const int v = sp.node(k, c).parent;
      next[c] = m.at[k - 1][v] - dec.g_path.step(k)[v] * sp.grid().dmu(k) +
                (integral[c] - integral_prev[v]);
    }
    m.at.push_back(std::move(next));
  }
  const BsdeSolution back = solve(basis, g, m.at[sp.steps()]);
  for (int k = 0; k <= sp.steps(); ++k) CHECK(max_abs_diff(back.y.at[k], m.at[k]) < 1e-10);
}

TEST_CASE("drift extraction: classical oracle has zero drift") {
  const FilteredSpace sp = make_s3();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const ClassicalOracle oracle(sp);
  Rng rng(7);
  const AdaptedProcess y = oracle.cond_all(random_payoff(sp, rng));
  const DriftExtraction ex = drift_extract(basis, oracle, RMatrix::scalar(0.3), y);
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v)
      CHECK(std::fabs(ex.g_path.step(k)[v]) < 1e-12);
}

TEST_CASE("drift extraction: E^r-martingale saturates the bound") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const RMatrix r = RMatrix::scalar(0.5);
  const ErOracle oracle(basis, r, +1);
  const AdaptedProcess y = oracle.cond_all(RandomVariable{1, {1.0, -1.0}});
  const DriftExtraction ex = drift_extract(basis, oracle, r, y);
  CHECK(std::fabs(ex.g_path.step(1)[0]) == doctest::Approx(0.5));
  CHECK(std::fabs(ex.z.at(1, 0)[0]) == doctest::Approx(1.0));
  CHECK(ex.worst_bound_gap <= 1e-12);
}

TEST_CASE("drift extraction rejects non-E-martingales") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const ClassicalOracle oracle(sp);
  AdaptedProcess y;
  y.at.push_back(RandomVariable{0, {1.0}});
  y.at.push_back(RandomVariable{1, {1.0, -1.0}});  // mean 0 != 1
  CHECK_THROWS_AS((void)drift_extract(basis, oracle, RMatrix::scalar(0.5), y), Error);
}

TEST_CASE("dominated decomposition matches the direct one for a known driver") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 3);
    params.clock_lo = 0.3;
    params.clock_hi = 0.6;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const RMatrix r = RMatrix::scalar(balanced_scalar_rho(basis, 0.4));
    const Driver g = r_norm_driver(basis, r, +1);
    const Manufactured made = make_supermartingale(basis, g, rng, 0.05);
    Rng cert_rng(1);
    const GExpectationOracle oracle(basis, g, check_balanced(basis, g, r, cert_rng));

    ErDomOptions opts;
    opts.schedule = {1.0, 64.0, 4096.0};
    const ErDomResult res = er_dom_decompose(basis, oracle, r, made.y, opts);
    CHECK(res.monotone);
    CHECK(res.verification_defect < 1e-8);
    const Decomposition direct = decompose_direct(basis, g, made.y);
    for (int k = 1; k <= sp.steps(); ++k)
      CHECK(max_abs_diff(res.da.step(k), direct.da.step(k)) < 1e-8);
    // trace gaps decay
    REQUIRE(res.trace.size() == 3);
    CHECK(res.trace[2].y_gap_sup <= res.trace[0].y_gap_sup + 1e-12);
  }
}

TEST_CASE("dominated decomposition of an E-martingale has no compensator") {
  const FilteredSpace sp = make_s3();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const RMatrix r = RMatrix::scalar(0.3);
  const ErOracle oracle(basis, r, +1);
  Rng rng(3);
  const AdaptedProcess y = oracle.cond_all(random_payoff(sp, rng));
  ErDomOptions opts;
  opts.schedule = {4.0};
  const ErDomResult res = er_dom_decompose(basis, oracle, r, y, opts);
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v)
      CHECK(std::fabs(res.da.step(k)[v]) < 1e-10);
}

TEST_CASE("classical oracle recovers the classical Doob decomposition") {
  Rng rng(8);
  SpaceParams params;
  params.depth = 3;
  const FilteredSpace sp = random_space(rng.next_u64(), params);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const ClassicalOracle oracle(sp);
  // classical supermartingale: conditional means minus a predictable drift
  const RandomVariable q = random_payoff(sp, rng);
  AdaptedProcess y;
  y.at.push_back(conditional_expectation(sp, q, 0));
  RandomVariable acc = constant_rv(sp, 0, 0.0);
  PredictableProcess drift;
  for (int k = 1; k <= sp.steps(); ++k) {
    RandomVariable dk{k - 1, std::vector<double>(sp.node_count(k - 1), 0.0)};
    for (auto& x : dk.values) x = rng.uniform(0.0, 0.2);
    drift.on_step.push_back(dk);
    RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
    for (int c = 0; c < sp.node_count(k); ++c) {
      const int v = sp.node(k, c).parent;
      next[c] = acc[v] + dk[v];
    }
    y.at.push_back(rv_sub(conditional_expectation(sp, q, k), next));
    acc = std::move(next);
  }
  ErDomOptions opts;
  opts.schedule.clear();
  const ErDomResult res =
      er_dom_decompose(basis, oracle, RMatrix::scalar(0.2), y, opts);
  for (int k = 1; k <= sp.steps(); ++k)
    CHECK(max_abs_diff(res.da.step(k), drift.step(k)) < 1e-11);
}

TEST_CASE("fixed point and closed form agree across the contraction boundary") {
  const FilteredSpace sp = make_s3();  // dmu = 1 per step
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const RMatrix r = RMatrix::scalar(0.3);
  const ErOracle oracle(basis, r, +1);
  Rng rng(10);
  const AdaptedProcess base = oracle.cond_all(random_payoff(sp, rng));
  AdaptedProcess y = base;
  // subtract a small drift to get a strict supermartingale
  for (int k = 1; k <= sp.steps(); ++k)
    for (auto& x : y.at[k].values) x -= 0.05 * k;
  ErDomOptions opts;
  opts.schedule = {0.25, 0.45};  // n dmu < 0.5: fixed-point route
  const ErDomResult fp = er_dom_decompose(basis, oracle, r, y, opts);
  opts.schedule = {0.55, 1.0};  // closed-form route
  const ErDomResult cf = er_dom_decompose(basis, oracle, r, y, opts);
  // both routes see the same limit object
  for (int k = 1; k <= sp.steps(); ++k)
    CHECK(max_abs_diff(fp.da.step(k), cf.da.step(k)) == 0.0);
  CHECK(fp.monotone);
  CHECK(cf.monotone);
}

TEST_CASE("a tower-breaking oracle is rejected by the decomposition identity") {
  const FilteredSpace sp = make_s3();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const WorstCaseStaticOracle oracle(sp, {{0.25, 0.25, 0.25, 0.25}, {0.3, 0.2, 0.2, 0.3}});
  // a strict supermartingale under the min-oracle
  AdaptedProcess y;
  y.at.push_back(RandomVariable{0, {2.0}});
  y.at.push_back(RandomVariable{1, {1.0, 0.5}});
  y.at.push_back(RandomVariable{2, {0.9, -0.8, 0.4, -0.6}});
  ErDomOptions opts;
  opts.schedule.clear();
  opts.tol = 1e-10;
  CHECK_THROWS_AS((void)er_dom_decompose(basis, oracle, RMatrix::scalar(0.5), y, opts),
                  Error);
}
