#include <benchmark/benchmark.h>

#include "gexpect/battery.hpp"
#include "gexpect/doobmeyer.hpp"
#include "gexpect/fuzz.hpp"
#include "gexpect/recover.hpp"

using namespace gexpect;

namespace {

FilteredSpace bench_space(int depth) {
  SpaceParams params;
  params.depth = depth;
  params.branch_lo = 2;
  params.branch_hi = 3;
  return random_space(0xBE5C, params);
}

}  // namespace

static void BM_BasisConstruction(benchmark::State& state) {
  const FilteredSpace sp = bench_space(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    MartingaleBasis basis = davis_varaiya_basis(sp);
    benchmark::DoNotOptimize(basis.dim());
  }
  state.SetComplexityN(sp.atoms());
}
BENCHMARK(BM_BasisConstruction)->DenseRange(3, 9, 2)->Complexity();

static void BM_BsdeSolveZero(benchmark::State& state) {
  const FilteredSpace sp = bench_space(static_cast<int>(state.range(0)));
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  Rng rng(7);
  const RandomVariable q = random_payoff(sp, rng);
  const Driver g = zero_driver();
  for (auto _ : state) {
    const BsdeSolution sol = solve(basis, g, q);
    benchmark::DoNotOptimize(sol.y.at[0][0]);
  }
  state.SetComplexityN(sp.atoms());
}
BENCHMARK(BM_BsdeSolveZero)->DenseRange(3, 9, 2)->Complexity();

static void BM_BsdeSolveNorm(benchmark::State& state) {
  const FilteredSpace sp = bench_space(static_cast<int>(state.range(0)));
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  Rng rng(7);
  const RandomVariable q = random_payoff(sp, rng);
  const Driver g =
      r_norm_driver(basis, RMatrix::scalar(balanced_scalar_rho(basis, 0.5)), +1);
  for (auto _ : state) {
    const BsdeSolution sol = solve(basis, g, q);
    benchmark::DoNotOptimize(sol.residual);
  }
  state.SetComplexityN(sp.atoms());
}
BENCHMARK(BM_BsdeSolveNorm)->DenseRange(3, 9, 2)->Complexity();

static void BM_BsdeSolveRootFind(benchmark::State& state) {
  // y-dependent driver exercises the bracketed scalar solve per node
  const FilteredSpace sp = bench_space(static_cast<int>(state.range(0)));
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  Rng rng(7);
  const RandomVariable q = random_payoff(sp, rng);
  const Driver g = linear_y_driver(-0.5);
  for (auto _ : state) {
    const BsdeSolution sol = solve(basis, g, q);
    benchmark::DoNotOptimize(sol.residual);
  }
  state.SetComplexityN(sp.atoms());
}
BENCHMARK(BM_BsdeSolveRootFind)->DenseRange(3, 7, 2)->Complexity();

static void BM_PenalizedStep(benchmark::State& state) {
  const FilteredSpace sp = bench_space(4);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const Driver g =
      r_norm_driver(basis, RMatrix::scalar(balanced_scalar_rho(basis, 0.4)), +1);
  Rng rng(3);
  const BsdeSolution mart = solve(basis, g, random_payoff(sp, rng));
  AdaptedProcess y = mart.y;
  for (int k = 1; k <= sp.steps(); ++k)
    for (auto& x : y.at[k].values) x -= 0.01 * k;
  const double n = static_cast<double>(state.range(0));
  for (auto _ : state) {
    const PenalizationTrace trace = penalized_sequence(basis, g, y, {n});
    benchmark::DoNotOptimize(trace.entries.back().y_gap_sup);
  }
}
BENCHMARK(BM_PenalizedStep)->Arg(16)->Arg(1024)->Arg(65536);

static void BM_RecoverOneStep(benchmark::State& state) {
  const FilteredSpace sp = bench_space(3);
  const MartingaleBasis basis = davis_varaiya_basis(sp);
  const RMatrix r = RMatrix::scalar(balanced_scalar_rho(basis, 0.4));
  const Driver g = r_norm_driver(basis, r, +1);
  Rng rng(5);
  const GExpectationOracle oracle(basis, g, check_balanced(basis, g, r, rng));
  RecoverOptions opts;
  opts.enforce_audit = false;
  opts.random_directions = 8;
  for (auto _ : state) {
    const RecoveredDriver rec = recover_driver(basis, oracle, r, opts);
    benchmark::DoNotOptimize(rec.g_at_zero());
  }
}
BENCHMARK(BM_RecoverOneStep);

static void BM_ConditionalExpectation(benchmark::State& state) {
  const FilteredSpace sp = bench_space(static_cast<int>(state.range(0)));
  Rng rng(9);
  const RandomVariable q = random_payoff(sp, rng);
  for (auto _ : state) {
    const RandomVariable e = conditional_expectation(sp, q, 0);
    benchmark::DoNotOptimize(e[0]);
  }
  state.SetComplexityN(sp.atoms());
}
BENCHMARK(BM_ConditionalExpectation)->DenseRange(3, 9, 2)->Complexity();

BENCHMARK_MAIN();
