#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "fixtures.hpp"
#include "gexpect/fuzz.hpp"
#include "gexpect/martingale.hpp"

using namespace gexpect;
using namespace gexpect::testing;

TEST_CASE("binary one-step basis: d = 1, unit increments") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  REQUIRE(basis.dim() == 1);
  // dM = (+1, -1) up to sign, <M>_1 = 1
  CHECK(std::fabs(basis.increment(1, 0, 0, 0)) == doctest::Approx(1.0));
  CHECK(basis.increment(1, 0, 0, 0) == doctest::Approx(-basis.increment(1, 0, 1, 0)));
  CHECK(basis.qv_increment(1, 0, 0) == doctest::Approx(1.0));
  CHECK(basis.phi(1, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("uniform 3-child node: d = 2 with orthogonal increments") {
  const FilteredSpace sp = make_trinomial();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  REQUIRE(basis.dim() == 2);
  double cross = 0.0;
  for (int c = 0; c < 3; ++c)
    cross += (1.0 / 3.0) * basis.increment(1, 0, c, 0) * basis.increment(1, 0, c, 1);
  CHECK(std::fabs(cross) < 1e-14);
  CHECK(basis.active(1, 0) == 2);
}

TEST_CASE("deterministic space has no martingale directions") {
  const FilteredSpace sp = make_deterministic();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  CHECK(basis.dim() == 0);
  // every martingale is constant: representation of a constant works
  AdaptedProcess n;
  for (int k = 0; k <= sp.steps(); ++k) n.at.push_back(constant_rv(sp, k, 2.5));
  const IntegrandVector z = represent(basis, n);
  CHECK(z.d == 0);
}

TEST_CASE("m_norm_sq is the phi-weighted sum") {
  const FilteredSpace sp = make_trinomial();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const std::vector<double> z{2.0, 1.0};
  const double expected = 4.0 * basis.phi(1, 0, 0) + 1.0 * basis.phi(1, 0, 1);
  CHECK(basis.m_norm_sq(1, 0, z) == doctest::Approx(expected));
  CHECK(basis.m_norm_sq(1, 0, std::vector<double>{0.0, 0.0}) == doctest::Approx(0.0));
  CHECK_THROWS_AS((void)basis.m_norm_sq(1, 0, std::vector<double>{1.0}), Error);
}

TEST_CASE("seminorm degeneracy where phi vanishes") {
  // binary node inside a space of global dimension 2: component 2 inactive
  SpaceSpec spec;
  spec.times = {0.0, 1.0, 2.0};
  spec.mu = {0.0, 1.0, 2.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  spec.nodes.push_back({"a", std::string("n0"), std::nullopt});
  spec.nodes.push_back({"b", std::string("n0"), std::nullopt});
  spec.nodes.push_back({"a1", std::string("a"), 0.2});
  spec.nodes.push_back({"a2", std::string("a"), 0.2});
  spec.nodes.push_back({"a3", std::string("a"), 0.2});
  spec.nodes.push_back({"b1", std::string("b"), 0.2});
  spec.nodes.push_back({"b2", std::string("b"), 0.2});
  const FilteredSpace sp = build_space(spec);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  REQUIRE(basis.dim() == 2);
  CHECK(basis.active(2, 1) == 1);  // node b is binary
  CHECK(basis.phi(2, 1, 1) == 0.0);
  // z supported on the dead component has zero seminorm
  CHECK(basis.m_norm_sq(2, 1, std::vector<double>{0.0, 5.0}) == doctest::Approx(0.0));
}

TEST_CASE("representation on the binary space is the scalar projection") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  AdaptedProcess n;
  n.at.push_back(constant_rv(sp, 0, 0.0));
  n.at.push_back(RandomVariable{1, {2.0, -2.0}});
  const IntegrandVector z = represent(basis, n);
  // dM = +-1, dN = +-2 -> Z = 2 (sign follows the basis orientation)
  CHECK(std::fabs(z.at(1, 0)[0]) == doctest::Approx(2.0));
  const RandomVariable rebuilt = stoch_integral(basis, z, 0, 1);
  CHECK(max_abs_diff(rebuilt, n.at[1]) < 1e-14);
}

TEST_CASE("represent rejects non-martingales") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  AdaptedProcess drifty;
  drifty.at.push_back(constant_rv(sp, 0, 0.0));
  drifty.at.push_back(RandomVariable{1, {2.0, -1.0}});  // mean 1/2, not 0
  CHECK_THROWS_AS((void)represent(basis, drifty), Error);
}

TEST_CASE("reconstruction is exact on fuzzed spaces") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = 3;
    params.branch_hi = 4;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    const AdaptedProcess n = random_martingale(sp, rng, 3.0);
    const IntegrandVector z = represent(basis, n);
    for (int k = 1; k <= sp.steps(); ++k) {
      const RandomVariable inc = stoch_integral(basis, z, 0, k);
      const RandomVariable rebuilt = rv_shift(inc, n.at[0][0]);
      CHECK(max_abs_diff(rebuilt, n.at[k]) < 1e-10);
    }
  }
}

TEST_CASE("integrands canonicalise dead components to zero") {
  Rng rng(4);
  SpaceParams params;
  params.depth = 3;
  params.branch_lo = 1;
  params.branch_hi = 3;
  const FilteredSpace sp = random_space(rng.next_u64(), params);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const AdaptedProcess n = random_martingale(sp, rng, 1.0);
  const IntegrandVector z = represent(basis, n);
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v)
      for (int i = basis.active(k, v); i < basis.dim(); ++i) CHECK(z.at(k, v)[i] == 0.0);
}

TEST_CASE("round trip through forward integration is the identity in H2_M") {
  Rng rng(11);
  SpaceParams params;
  params.depth = 3;
  const FilteredSpace sp = random_space(rng.next_u64(), params);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  IntegrandVector z = zero_integrand(sp, basis.dim());
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v)
      for (int i = 0; i < basis.active(k, v); ++i) z.at(k, v)[i] = rng.uniform(-2.0, 2.0);
  AdaptedProcess n;
  n.at.push_back(constant_rv(sp, 0, 0.0));
  for (int k = 1; k <= sp.steps(); ++k) n.at.push_back(stoch_integral(basis, z, 0, k));
  const IntegrandVector back = represent(basis, n);
  for (int k = 1; k <= sp.steps(); ++k)
    for (int v = 0; v < sp.node_count(k - 1); ++v)
      for (int i = 0; i < basis.dim(); ++i)
        CHECK(back.at(k, v)[i] == doctest::Approx(z.at(k, v)[i]).epsilon(1e-10));
}

TEST_CASE("isometry: all three expressions agree on the one-step space") {
  const FilteredSpace sp = make_s2();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  IntegrandVector z = zero_integrand(sp, 1);
  z.at(1, 0)[0] = 1.0;
  PredictableProcess all;
  all.on_step.push_back(constant_rv(sp, 0, 1.0));
  const IsometryReport rep = isometry_check(basis, z, all);
  CHECK(rep.lhs == doctest::Approx(1.0));
  CHECK(rep.rhs_qv == doctest::Approx(1.0));
  CHECK(rep.rhs_square == doctest::Approx(1.0));

  IntegrandVector zero = zero_integrand(sp, 1);
  const IsometryReport rep0 = isometry_check(basis, zero, all);
  CHECK(rep0.lhs == 0.0);
  CHECK(rep0.rhs_qv == 0.0);
  CHECK(rep0.rhs_square == 0.0);
}

TEST_CASE("isometry equality on fuzzed integrands and indicator sets") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 4);
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    IntegrandVector z = zero_integrand(sp, basis.dim());
    for (int k = 1; k <= sp.steps(); ++k)
      for (int v = 0; v < sp.node_count(k - 1); ++v)
        for (int i = 0; i < basis.active(k, v); ++i) z.at(k, v)[i] = rng.uniform(-2.0, 2.0);
    const PredictableProcess a = random_indicator(sp, rng);
    const IsometryReport rep = isometry_check(basis, z, a);
    CHECK(rep.lhs <= rep.rhs_qv + 1e-12);
    CHECK(rep.max_gap() < 1e-10);
  }
}

TEST_CASE("stochastic integral increments are conditionally centred") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(2, 4);
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    IntegrandVector z = zero_integrand(sp, basis.dim());
    for (int k = 1; k <= sp.steps(); ++k)
      for (int v = 0; v < sp.node_count(k - 1); ++v)
        for (int i = 0; i < basis.active(k, v); ++i) z.at(k, v)[i] = rng.uniform(-2.0, 2.0);
    const int a = rng.uniform_int(0, sp.steps() - 1);
    const RandomVariable integral = stoch_integral(basis, z, a, sp.steps());
    const RandomVariable mean = conditional_expectation(sp, integral, a);
    for (int v = 0; v < mean.size(); ++v) CHECK(std::fabs(mean[v]) < 1e-12);
  }
}

TEST_CASE("each basis process is a martingale under conditional expectation") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 5);
    params.branch_lo = 1;
    params.branch_hi = 4;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    for (int i = 0; i < basis.dim(); ++i) {
      CHECK(basis.martingale(i).at[0][0] == 0.0);
      for (int k = 1; k <= sp.steps(); ++k) {
        const RandomVariable mean =
            conditional_expectation(sp, basis.martingale(i).at[k], k - 1);
        CHECK(max_abs_diff(mean, basis.martingale(i).at[k - 1]) < 1e-13);
      }
    }
  }
}

TEST_CASE("qv chain: active components are nested") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(1, 5);
    params.branch_lo = 1;
    params.branch_hi = 4;
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const MartingaleBasis basis = davis_varaiya_basis(sp);
    for (int k = 1; k <= sp.steps(); ++k)
      for (int v = 0; v < sp.node_count(k - 1); ++v)
        for (int i = 0; i + 1 < basis.dim(); ++i)
          if (basis.phi(k, v, i + 1) > 0.0) CHECK(basis.phi(k, v, i) > 0.0);
  }
}

TEST_CASE("basis dump matches the golden file") {
  const FilteredSpace sp = make_s3();
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const std::string dump = dump_basis(basis);
  const std::string path = std::string(GEXPECT_GOLDEN_DIR) + "/basis_s3.txt";
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream golden;
  golden << in.rdbuf();
  CHECK(dump == golden.str());
}
