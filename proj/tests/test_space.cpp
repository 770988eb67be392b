#include <doctest.h>

#include <functional>

#include "fixtures.hpp"
#include "gexpect/fuzz.hpp"

using namespace gexpect;
using gexpect::testing::make_s2;
using gexpect::testing::make_s3;

namespace {

bool throws_code(ErrorCode expected, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == expected;
  }
  return false;
}

}  // namespace

TEST_CASE("one-step binary space validates") {
  const FilteredSpace sp = make_s2();
  CHECK(sp.steps() == 1);
  CHECK(sp.atoms() == 2);
  CHECK(sp.node(0, 0).p == doctest::Approx(1.0));
  CHECK(sp.grid().dmu(1) == doctest::Approx(1.0));
}

TEST_CASE("probability mismatch is rejected") {
  SpaceSpec spec;
  spec.times = {0.0, 1.0};
  spec.mu = {0.0, 1.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  spec.nodes.push_back({"u", std::string("n0"), 0.6});
  spec.nodes.push_back({"d", std::string("n0"), 0.6});
  CHECK(throws_code(ErrorCode::ProbabilityMismatch, [&] { build_space(spec); }));
}

TEST_CASE("non-increasing clock is rejected") {
  SpaceSpec spec;
  spec.times = {0.0, 1.0, 2.0};
  spec.mu = {0.0, 1.0, 1.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  CHECK(throws_code(ErrorCode::NonIncreasingClock, [&] { build_space(spec); }));
}

TEST_CASE("zero-probability atoms are rejected") {
  SpaceSpec spec;
  spec.times = {0.0, 1.0};
  spec.mu = {0.0, 1.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  spec.nodes.push_back({"u", std::string("n0"), 1.0});
  spec.nodes.push_back({"d", std::string("n0"), 0.0});
  CHECK(throws_code(ErrorCode::ZeroProbabilityAtom, [&] { build_space(spec); }));
}

TEST_CASE("internal nodes without children are rejected") {
  SpaceSpec spec;
  spec.times = {0.0, 1.0, 2.0};
  spec.mu = {0.0, 1.0, 2.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  spec.nodes.push_back({"u", std::string("n0"), std::nullopt});
  spec.nodes.push_back({"d", std::string("n0"), std::nullopt});
  spec.nodes.push_back({"uu", std::string("u"), 1.0});
  CHECK(throws_code(ErrorCode::NonRefining, [&] { build_space(spec); }));
}

TEST_CASE("conditional expectation on the binary space") {
  const FilteredSpace sp = make_s2();
  const RandomVariable x{1, {1.0, 3.0}};
  CHECK(conditional_expectation(sp, x, 0)[0] == doctest::Approx(2.0));
  CHECK(throws_code(ErrorCode::LevelOrder,
                    [&] { conditional_expectation(sp, RandomVariable{0, {1.0}}, 1); }));
}

TEST_CASE("constants are preserved at every level") {
  const FilteredSpace sp = make_s3();
  const RandomVariable x{2, {3.5, 3.5, 3.5, 3.5}};
  for (int k = 0; k <= 2; ++k) {
    const RandomVariable e = conditional_expectation(sp, x, k);
    for (int v = 0; v < e.size(); ++v) CHECK(e[v] == doctest::Approx(3.5));
  }
}

TEST_CASE("nested averages on the two-step tree") {
  const FilteredSpace sp = make_s3();
  const RandomVariable x{2, {4.0, 0.0, 2.0, 2.0}};
  const RandomVariable e1 = conditional_expectation(sp, x, 1);
  CHECK(e1[0] == doctest::Approx(2.0));
  CHECK(e1[1] == doctest::Approx(2.0));
  CHECK(conditional_expectation(sp, x, 0)[0] == doctest::Approx(2.0));
}

TEST_CASE("tower property holds on fuzzed spaces") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    SpaceParams params;
    params.depth = rng.uniform_int(2, 6);
    const FilteredSpace sp = random_space(rng.next_u64(), params);
    const RandomVariable x = random_payoff(sp, rng);
    for (int t = 1; t <= sp.steps(); ++t)
      for (int s = 0; s < t; ++s) {
        const RandomVariable nested =
            conditional_expectation(sp, conditional_expectation(sp, x, t), s);
        const RandomVariable direct = conditional_expectation(sp, x, s);
        CHECK(max_abs_diff(nested, direct) < 1e-12);
      }
  }
}

TEST_CASE("stieltjes integral sums the clock") {
  SpaceSpec spec;
  spec.times = {0.0, 1.0, 2.0};
  spec.mu = {0.0, 0.5, 1.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  spec.nodes.push_back({"a", std::string("n0"), std::nullopt});
  spec.nodes.push_back({"b", std::string("a"), 1.0});
  const FilteredSpace sp = build_space(spec);
  PredictableProcess ones;
  ones.on_step.push_back(constant_rv(sp, 0, 1.0));
  ones.on_step.push_back(constant_rv(sp, 1, 1.0));
  CHECK(stieltjes_integral(sp, ones, 0, 2)[0] == doctest::Approx(1.0));

  PredictableProcess zeros;
  zeros.on_step.push_back(constant_rv(sp, 0, 0.0));
  zeros.on_step.push_back(constant_rv(sp, 1, 0.0));
  CHECK(stieltjes_integral(sp, zeros, 0, 2)[0] == doctest::Approx(0.0));
}

TEST_CASE("stieltjes integral is pathwise on the two-step tree") {
  const FilteredSpace sp = make_s3();  // dmu = (1, 1)
  PredictableProcess h;
  h.on_step.push_back(RandomVariable{0, {2.0}});
  h.on_step.push_back(RandomVariable{1, {3.0, 1.0}});
  const RandomVariable integral = stieltjes_integral(sp, h, 0, 2);
  CHECK(integral[0] == doctest::Approx(5.0));  // uu
  CHECK(integral[1] == doctest::Approx(5.0));  // ud
  CHECK(integral[2] == doctest::Approx(3.0));  // du
  CHECK(integral[3] == doctest::Approx(3.0));  // dd
}

TEST_CASE("stieltjes integral is additive and linear") {
  Rng rng(99);
  SpaceParams params;
  params.depth = 4;
  const FilteredSpace sp = random_space(rng.next_u64(), params);
  PredictableProcess h, g;
  for (int k = 1; k <= 4; ++k) {
    h.on_step.push_back(random_rv(sp, rng, k - 1));
    g.on_step.push_back(random_rv(sp, rng, k - 1));
  }
  const RandomVariable whole = stieltjes_integral(sp, h, 0, 4);
  const RandomVariable first = stieltjes_integral(sp, h, 0, 2);
  const RandomVariable second = stieltjes_integral(sp, h, 2, 4);
  const RandomVariable glued = rv_add(lift(sp, first, 4), second);
  CHECK(max_abs_diff(whole, glued) < 1e-13);

  PredictableProcess combo;
  for (int k = 1; k <= 4; ++k) {
    RandomVariable c = rv_add(rv_scale(h.step(k), 2.0), g.step(k));
    combo.on_step.push_back(std::move(c));
  }
  const RandomVariable lhs = stieltjes_integral(sp, combo, 0, 4);
  const RandomVariable rhs =
      rv_add(rv_scale(whole, 2.0), stieltjes_integral(sp, g, 0, 4));
  CHECK(max_abs_diff(lhs, rhs) < 1e-13);
}

TEST_CASE("random_space is a deterministic function of the seed") {
  SpaceParams params;
  params.depth = 2;
  params.branch_lo = 2;
  params.branch_hi = 2;
  const FilteredSpace a = random_space(7, params);
  const FilteredSpace b = random_space(7, params);
  CHECK(a.atoms() == 4);
  REQUIRE(a.atoms() == b.atoms());
  for (int w = 0; w < a.atoms(); ++w)
    CHECK(a.node(a.steps(), w).p == b.node(b.steps(), w).p);
}

TEST_CASE("different seeds differ in at least one probability") {
  SpaceParams params;
  params.depth = 2;
  params.branch_lo = 2;
  params.branch_hi = 2;
  const FilteredSpace a = random_space(7, params);
  const FilteredSpace b = random_space(8, params);
  bool differs = a.atoms() != b.atoms();
  if (!differs)
    for (int w = 0; w < a.atoms(); ++w)
      if (a.node(a.steps(), w).p != b.node(b.steps(), w).p) differs = true;
  CHECK(differs);
}

TEST_CASE("degenerate generator inputs are rejected") {
  CHECK(throws_code(ErrorCode::NoStep, [] { random_space(1, SpaceParams{.depth = 0}); }));
  CHECK(throws_code(ErrorCode::ParamsOutOfRange,
                    [] { random_space(1, SpaceParams{.depth = 13}); }));
  CHECK(throws_code(ErrorCode::ParamsOutOfRange, [] {
    SpaceParams p;
    p.branch_hi = 9;
    random_space(1, p);
  }));
}
