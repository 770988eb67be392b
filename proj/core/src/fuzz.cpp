#include "gexpect/fuzz.hpp"

#include <string>

namespace gexpect {

FilteredSpace random_space(std::uint64_t seed, const SpaceParams& params) {
  if (params.depth == 0) fail(ErrorCode::NoStep, "depth 0 gives a trivial grid {0}");
  if (params.depth < 0 || params.depth > kMaxDepth)
    fail(ErrorCode::ParamsOutOfRange, "depth must lie in 1.." + std::to_string(kMaxDepth));
  if (params.branch_lo < 1 || params.branch_hi > kMaxBranching ||
      params.branch_lo > params.branch_hi)
    fail(ErrorCode::ParamsOutOfRange, "branching range must lie in 1.." +
                                          std::to_string(kMaxBranching));
  if (!(params.clock_lo > 0.0) || params.clock_lo > params.clock_hi)
    fail(ErrorCode::ParamsOutOfRange, "clock increments must be positive and ordered");

  Rng rng(seed);
  SpaceSpec spec;
  spec.times.push_back(0.0);
  spec.mu.push_back(0.0);
  for (int k = 1; k <= params.depth; ++k) {
    spec.times.push_back(static_cast<double>(k));
    spec.mu.push_back(spec.mu.back() + rng.uniform(params.clock_lo, params.clock_hi));
  }

  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  struct Pending {
    std::string id;
    double p;
  };
  std::vector<Pending> frontier{{"n0", 1.0}};
  int counter = 1;
  for (int k = 1; k <= params.depth; ++k) {
    std::vector<Pending> next;
    for (const auto& parent : frontier) {
      const int m = rng.uniform_int(params.branch_lo, params.branch_hi);
      std::vector<double> w(m);
      double total = 0.0;
      for (int j = 0; j < m; ++j) {
        w[j] = rng.uniform(params.weight_lo, 1.0);
        total += w[j];
      }
      for (int j = 0; j < m; ++j) {
        Pending child{"n" + std::to_string(counter++), parent.p * (w[j] / total)};
        spec.nodes.push_back({child.id, parent.id,
                              k == params.depth ? std::optional<double>(child.p) : std::nullopt});
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  return build_space(spec);
}

RandomVariable random_payoff(const FilteredSpace& sp, Rng& rng, double lo, double hi) {
  return random_rv(sp, rng, sp.steps(), lo, hi);
}

RandomVariable random_rv(const FilteredSpace& sp, Rng& rng, int level, double lo, double hi) {
  RandomVariable x{level, std::vector<double>(sp.node_count(level), 0.0)};
  for (auto& v : x.values) v = rng.uniform(lo, hi);
  return x;
}

AdaptedProcess random_adapted(const FilteredSpace& sp, Rng& rng, double lo, double hi) {
  AdaptedProcess y;
  for (int k = 0; k <= sp.steps(); ++k) y.at.push_back(random_rv(sp, rng, k, lo, hi));
  return y;
}

PredictableProcess random_indicator(const FilteredSpace& sp, Rng& rng) {
  PredictableProcess a;
  for (int k = 1; k <= sp.steps(); ++k) {
    RandomVariable x{k - 1, std::vector<double>(sp.node_count(k - 1), 0.0)};
    for (auto& v : x.values) v = rng.next_double() < 0.5 ? 0.0 : 1.0;
    a.on_step.push_back(std::move(x));
  }
  return a;
}

AdaptedProcess random_martingale(const FilteredSpace& sp, Rng& rng, double scale) {
  RandomVariable q = random_payoff(sp, rng, -scale, scale);
  AdaptedProcess n;
  for (int k = 0; k <= sp.steps(); ++k) n.at.push_back(conditional_expectation(sp, q, k));
  const double m0 = n.at[0][0];
  for (auto& x : n.at)
    for (auto& v : x.values) v -= m0;
  return n;
}

}  // namespace gexpect
