#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gexpect/errors.hpp"

namespace gexpect {

// ===========================================================================
// Finite filtered probability space: refining partitions of a finite outcome
// set over a deterministic grid, plus the strictly increasing clock mu that
// replaces Lebesgue time in all integrals.
// ===========================================================================

struct TimeGrid {
  std::vector<double> times;  // t_0 = 0 < t_1 < ... < t_K = T
  std::vector<double> mu;     // mu(t_0) < mu(t_1) < ... < mu(t_K)

  int steps() const { return static_cast<int>(times.size()) - 1; }  // K
  double horizon() const { return times.back(); }
  double dmu(int k) const { return mu[k] - mu[k - 1]; }  // k in 1..K
  double mu_at(int k) const { return mu[k]; }
};

// One cell of a partition. Indices are positions within a level, in canonical
// order (order of first appearance); this order fixes every vector layout in
// scenario files and reports.
struct Node {
  std::string id;
  int parent = -1;            // index within the previous level; -1 for the root
  std::vector<int> children;  // indices within the next level
  double p = 0.0;             // P(node)
};

struct SpaceSpec {
  std::vector<double> times;
  std::vector<double> mu;
  struct NodeSpec {
    std::string id;
    std::optional<std::string> parent;  // absent for the root
    std::optional<double> p;            // required on leaves, checked if given elsewhere
  };
  std::vector<NodeSpec> nodes;
};

class FilteredSpace {
 public:
  FilteredSpace() = default;
  FilteredSpace(TimeGrid grid, std::vector<std::vector<Node>> levels)
      : grid_(std::move(grid)), levels_(std::move(levels)) {}

  const TimeGrid& grid() const { return grid_; }
  int steps() const { return grid_.steps(); }            // K
  int levels() const { return grid_.steps() + 1; }       // K + 1
  int node_count(int level) const { return static_cast<int>(levels_[level].size()); }
  const Node& node(int level, int idx) const { return levels_[level][idx]; }
  int atoms() const { return node_count(steps()); }

  // conditional probability of a node given its parent
  double cond_prob(int level, int idx) const {
    const Node& n = levels_[level][idx];
    return n.p / levels_[level - 1][n.parent].p;
  }

  // index of the level-`coarse` ancestor of node `idx` at level `fine`
  int ancestor(int fine, int idx, int coarse) const {
    for (int l = fine; l > coarse; --l) idx = levels_[l][idx].parent;
    return idx;
  }

  int find_node(int level, const std::string& id) const;  // -1 if absent

 private:
  TimeGrid grid_;
  std::vector<std::vector<Node>> levels_;  // levels_[k] = partition at t_k
};

// A validated space; throws NonRefining / NonIncreasingClock /
// ProbabilityMismatch / ZeroProbabilityAtom / NoStep / ScenarioInvalid.
FilteredSpace build_space(const SpaceSpec& spec);

// ===========================================================================
// Random variables and processes
// ===========================================================================

// F_{t_level}-measurable variable: one value per node of the level's
// partition, canonical order. Measurability is structural.
struct RandomVariable {
  int level = 0;
  std::vector<double> values;

  double operator[](int node) const { return values[node]; }
  double& operator[](int node) { return values[node]; }
  int size() const { return static_cast<int>(values.size()); }
};

RandomVariable constant_rv(const FilteredSpace& sp, int level, double c);

// Adapted: at[k] is F_{t_k}-measurable, k = 0..K.
struct AdaptedProcess {
  std::vector<RandomVariable> at;
  int last_level() const { return static_cast<int>(at.size()) - 1; }
};

// Predictable: the value on ]t_{k-1}, t_k] is fixed at t_{k-1}.
// on_step[k-1] is a level-(k-1) variable, k = 1..K.
struct PredictableProcess {
  std::vector<RandomVariable> on_step;
  const RandomVariable& step(int k) const { return on_step[k - 1]; }
  RandomVariable& step(int k) { return on_step[k - 1]; }
};

// Classical kernel underlying everything: p-weighted nested averages.
// Requires k <= x.level (LevelOrder otherwise).
RandomVariable conditional_expectation(const FilteredSpace& sp, const RandomVariable& x, int k);

double expectation(const FilteredSpace& sp, const RandomVariable& x);

// Pathwise Stieltjes integral of a predictable integrand against mu over
// ]t_a, t_b]: sum_{k=a+1..b} h_k * dmu_k, returned at level b.
RandomVariable stieltjes_integral(const FilteredSpace& sp, const PredictableProcess& h, int a,
                                  int b);

// Constant-on-children extension of x to a finer level (k >= x.level).
RandomVariable lift(const FilteredSpace& sp, const RandomVariable& x, int k);

// Pointwise helpers (levels must match).
RandomVariable rv_add(const RandomVariable& a, const RandomVariable& b);
RandomVariable rv_sub(const RandomVariable& a, const RandomVariable& b);
RandomVariable rv_scale(const RandomVariable& a, double s);
RandomVariable rv_shift(const RandomVariable& a, double s);
double max_abs_diff(const RandomVariable& a, const RandomVariable& b);

}  // namespace gexpect
