#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gexpect/fuzz.hpp"
#include "gexpect/stochcalc.hpp"

using namespace gexpect;
using namespace gexpect::testing;

namespace {

AdaptedProcess scaled_martingale(const FilteredSpace& sp, Rng& rng, double max_jump) {
  AdaptedProcess n = random_martingale(sp, rng, 1.0);
  double mj = 0.0;
  for (int k = 1; k <= sp.steps(); ++k)
    for (int c = 0; c < sp.node_count(k); ++c)
      mj = std::max(mj, std::fabs(n.at[k][c] - n.at[k - 1][sp.node(k, c).parent]));
  if (mj > max_jump)
    for (auto& rv : n.at)
      for (auto& x : rv.values) x *= max_jump / mj;
  return n;
}

}  // namespace

TEST_CASE("doleans product formula on a deterministic path") {
  FVProcess nu;
  nu.values = {0.0, 0.5, 0.25};  // jumps 0.5, -0.25
  const auto e = doleans_exponential_path(nu);
  CHECK(e[0] == doctest::Approx(1.0));
  CHECK(e[1] == doctest::Approx(1.5));
  CHECK(e[2] == doctest::Approx(1.125));
}

TEST_CASE("doleans of zero is one") {
  const FilteredSpace sp = make_s3();
  AdaptedProcess zero;
  for (int k = 0; k <= sp.steps(); ++k) zero.at.push_back(constant_rv(sp, k, 0.0));
  const DoleansResult e = doleans_exponential(sp, zero);
  CHECK(e.positive);
  for (int k = 0; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k); ++v) CHECK(e.value.at[k][v] == 1.0);
}

TEST_CASE("doleans exponential of a bounded-jump martingale is a positive martingale") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 5);
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const AdaptedProcess n = scaled_martingale(sp, rng, 0.9);
    const DoleansResult e = doleans_exponential(sp, n);
    CHECK(e.positive);
    for (int k = 1; k <= sp.steps(); ++k) {
      const RandomVariable mean = conditional_expectation(sp, e.value.at[k], k - 1);
      CHECK(max_abs_diff(mean, e.value.at[k - 1]) < 1e-10);
    }
  }
}

TEST_CASE("a jump at -1 kills the exponential and clears the positivity flag") {
  const FilteredSpace sp = make_s2();
  AdaptedProcess n;
  n.at.push_back(constant_rv(sp, 0, 0.0));
  n.at.push_back(RandomVariable{1, {-1.0, 1.0}});
  const DoleansResult e = doleans_exponential(sp, n);
  CHECK_FALSE(e.positive);
  CHECK(e.value.at[1][0] == 0.0);
}

TEST_CASE("right-jump-inversion formula and identity") {
  FVProcess nu;
  nu.values = {0.0, 0.5};
  const FVProcess tilde = right_jump_inversion(nu);
  CHECK(tilde.jump(1) == doctest::Approx(1.0));
  CHECK(doleans_exponential_path(FVProcess{{0.0, -0.5}})[1] == doctest::Approx(0.5));
  CHECK(doleans_exponential_path(tilde)[1] == doctest::Approx(2.0));

  FVProcess zero;
  zero.values = {0.0, 0.0, 0.0};
  const FVProcess tz = right_jump_inversion(zero);
  for (double x : tz.values) CHECK(x == 0.0);

  FVProcess two;
  two.values = {0.0, 0.2, 0.6};  // jumps 0.2, 0.4
  const FVProcess t2 = right_jump_inversion(two);
  CHECK(t2.jump(1) == doctest::Approx(0.25));
  CHECK(t2.jump(2) == doctest::Approx(2.0 / 3.0));

  FVProcess big;
  big.values = {0.0, 1.0};
  CHECK_THROWS_AS((void)right_jump_inversion(big), Error);
}

TEST_CASE("inversion identity on fuzzed paths") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    FVProcess nu;
    nu.values.push_back(0.0);
    const int steps = rng.uniform_int(1, 8);
    for (int k = 0; k < steps; ++k)
      nu.values.push_back(nu.values.back() + rng.uniform(0.0, 0.92));
    const FVProcess tilde = right_jump_inversion(nu);
    FVProcess neg;
    for (double x : nu.values) neg.values.push_back(-x);
    const auto e_neg = doleans_exponential_path(neg);
    const auto e_tilde = doleans_exponential_path(tilde);
    for (std::size_t k = 0; k < nu.values.size(); ++k)
      CHECK(std::fabs(e_neg[k] * e_tilde[k] - 1.0) < 1e-12);
  }
}

TEST_CASE("groenwall bound: examples and recursion oracle") {
  {
    FVProcess nu;
    nu.values = {0.0, 0.5};
    CHECK(gronwall_bound(1.0, nu, 0) == doctest::Approx(2.0));
  }
  {
    FVProcess nu;
    nu.values = {0.0, 0.0};
    CHECK(gronwall_bound(3.0, nu, 0) == doctest::Approx(3.0));
  }
  {
    FVProcess nu;
    nu.values = {0.0, 0.2, 0.6};
    const double bound = gronwall_bound(1.0, nu, 0);
    CHECK(bound == doctest::Approx(1.0 / (0.8 * 0.6)));
    // equality-case recursion u_k = alpha + sum_{j>k} u_j dnu_j stays below
    double u2 = 1.0;
    double u1 = 1.0 + u2 * 0.4;
    double u0 = 1.0 + u1 * 0.2 + u2 * 0.4;
    CHECK(u0 <= bound + 1e-12);
  }
  {
    FVProcess down;
    down.values = {0.0, -0.1};
    CHECK_THROWS_AS((void)gronwall_bound(1.0, down, 0), Error);
  }
}

TEST_CASE("path-alpha groenwall agrees with the constant closed form") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    const int steps = rng.uniform_int(1, 7);
    FVProcess nu;
    nu.values.push_back(0.0);
    for (int k = 0; k < steps; ++k)
      nu.values.push_back(nu.values.back() + rng.uniform(0.0, 0.9));
    const double alpha = rng.uniform(0.1, 2.0);
    const int t = rng.uniform_int(0, steps - 1);
    const double a = gronwall_bound(alpha, nu, t);
    const double b = gronwall_bound_path(std::vector<double>(steps + 1, alpha), nu, t);
    CHECK(std::fabs(a - b) < 1e-12 * (1.0 + std::fabs(a)));
  }
}

TEST_CASE("girsanov reweights atoms and flags equivalence") {
  const FilteredSpace sp = make_s2();
  const Measure m = girsanov(sp, RandomVariable{1, {1.5, 0.5}});
  CHECK(m.q[0] == doctest::Approx(0.75));
  CHECK(m.q[1] == doctest::Approx(0.25));
  CHECK(m.equivalent_to_p);

  const Measure id = girsanov(sp, RandomVariable{1, {1.0, 1.0}});
  CHECK(id.q[0] == doctest::Approx(0.5));

  CHECK_THROWS_AS((void)girsanov(sp, RandomVariable{1, {2.0, 0.5}}), Error);   // mean != 1
  CHECK_THROWS_AS((void)girsanov(sp, RandomVariable{1, {2.5, -0.5}}), Error);  // negative
}

TEST_CASE("girsanov drift removal: tilted basis martingales are q-martingales") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 4);
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    if (basis.dim() == 0) continue;

    // bounded predictable theta with |theta dM| < 1
    IntegrandVector theta = zero_integrand(sp, basis.dim());
    for (int k = 1; k <= sp.steps(); ++k)
      for (int v = 0; v < sp.node_count(k - 1); ++v)
        for (int i = 0; i < basis.active(k, v); ++i)
          theta.at(k, v)[i] = rng.uniform(-0.2, 0.2);

    AdaptedProcess n;
    n.at.push_back(constant_rv(sp, 0, 0.0));
    for (int k = 1; k <= sp.steps(); ++k) n.at.push_back(stoch_integral(basis, theta, 0, k));
    const DoleansResult lambda = doleans_exponential(sp, n);
    REQUIRE(lambda.positive);
    const Measure q = girsanov(sp, lambda.value.at[sp.steps()]);

    for (int i = 0; i < basis.dim(); ++i) {
      // M~^i = M^i - int theta^i d<M^i> must be drift-free under q
      AdaptedProcess comp;
      comp.at.push_back(constant_rv(sp, 0, 0.0));
      for (int k = 1; k <= sp.steps(); ++k) {
        RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
        for (int c = 0; c < sp.node_count(k); ++c) {
          const int v = sp.node(k, c).parent;
          next[c] = comp.at[k - 1][v] + theta.at(k, v)[i] * basis.qv_increment(k, v, i);
        }
        comp.at.push_back(std::move(next));
      }
      AdaptedProcess mt;
      for (int k = 0; k <= sp.steps(); ++k)
        mt.at.push_back(rv_sub(basis.martingale(i).at[k], comp.at[k]));
      CHECK(martingale_defect_under(sp, mt, q) < 1e-10);
    }
  }
}

TEST_CASE("exponential moment report") {
  const FilteredSpace sp = make_s2();
  {
    AdaptedProcess zero;
    zero.at.push_back(constant_rv(sp, 0, 0.0));
    zero.at.push_back(constant_rv(sp, 1, 0.0));
    const ExpMomentReport rep = exp_moment_report(sp, zero, 8);
    for (const auto& [p, value] : rep.moments) CHECK(value == doctest::Approx(1.0));
    CHECK(rep.positive);
  }
  {
    AdaptedProcess n;
    n.at.push_back(constant_rv(sp, 0, 0.0));
    n.at.push_back(RandomVariable{1, {0.5, -0.5}});
    const ExpMomentReport rep = exp_moment_report(sp, n, 2);
    REQUIRE(rep.moments.size() == 1);
    CHECK(rep.moments[0].second == doctest::Approx(1.25));
    CHECK(rep.identity_defect < 1e-14);
    CHECK(rep.expectation_lhs <= rep.expectation_rhs + 1e-12);
  }
}

TEST_CASE("exponential square identity and expectation bound on fuzzed martingales") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 4);
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const AdaptedProcess n = scaled_martingale(sp, rng, 0.8);
    const ExpMomentReport rep = exp_moment_report(sp, n, 16);
    CHECK(rep.positive);
    CHECK(rep.identity_defect < 1e-10);
    CHECK(rep.expectation_lhs <= rep.expectation_rhs + 1e-10);
    for (const auto& [p, value] : rep.moments) CHECK(std::isfinite(value));
  }
}
