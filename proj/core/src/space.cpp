#include "gexpect/space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace gexpect {

int FilteredSpace::find_node(int level, const std::string& id) const {
  for (int i = 0; i < node_count(level); ++i)
    if (levels_[level][i].id == id) return i;
  return -1;
}

FilteredSpace build_space(const SpaceSpec& spec) {
  const auto n_times = spec.times.size();
  if (n_times != spec.mu.size())
    fail(ErrorCode::ScenarioInvalid, "times and mu must have equal length");
  if (n_times < 2) fail(ErrorCode::NoStep, "grid needs at least one step (t_0 and t_K)");
  if (spec.times.front() != 0.0)
    fail(ErrorCode::ScenarioInvalid, "grid must start at t_0 = 0");
  for (std::size_t k = 1; k < n_times; ++k) {
    if (!(spec.times[k] > spec.times[k - 1]))
      fail(ErrorCode::ScenarioInvalid, "times must be strictly increasing");
    if (!(spec.mu[k] > spec.mu[k - 1]))
      fail(ErrorCode::NonIncreasingClock,
           "mu must be strictly increasing (violated at index " + std::to_string(k) + ")");
  }
  if (!std::isfinite(spec.mu.back())) fail(ErrorCode::NonIncreasingClock, "mu(T) must be finite");

  const int K = static_cast<int>(n_times) - 1;

  // Resolve the parent links into per-level node lists, canonical order =
  // order of appearance within each level.
  struct Raw {
    int level = -1;
    int index = -1;  // index within its level
  };
  std::map<std::string, Raw> by_id;
  std::vector<std::vector<Node>> levels(K + 1);
  std::vector<std::vector<std::optional<double>>> declared(K + 1);

  // Multiple passes: a node can appear before its parent in the list only if
  // the parent was already seen; keep it simple and require parents first.
  for (const auto& ns : spec.nodes) {
    if (by_id.count(ns.id))
      fail(ErrorCode::ScenarioInvalid, "duplicate node id '" + ns.id + "'");
    int level, parent_idx;
    if (!ns.parent.has_value()) {
      level = 0;
      parent_idx = -1;
      if (!levels[0].empty()) fail(ErrorCode::ScenarioInvalid, "more than one root node");
    } else {
      auto it = by_id.find(*ns.parent);
      if (it == by_id.end())
        fail(ErrorCode::ScenarioInvalid,
             "node '" + ns.id + "' references unknown parent '" + *ns.parent + "'");
      level = it->second.level + 1;
      if (level > K)
        fail(ErrorCode::NonRefining, "node '" + ns.id + "' lies below the last grid time");
      parent_idx = it->second.index;
    }
    Node n;
    n.id = ns.id;
    n.parent = parent_idx;
    const int idx = static_cast<int>(levels[level].size());
    levels[level].push_back(std::move(n));
    declared[level].push_back(ns.p);
    if (parent_idx >= 0) levels[level - 1][parent_idx].children.push_back(idx);
    by_id[ns.id] = {level, idx};
  }

  if (levels[0].empty()) fail(ErrorCode::ScenarioInvalid, "no root node");
  for (int k = 0; k < K; ++k) {
    for (const auto& n : levels[k])
      if (n.children.empty())
        fail(ErrorCode::NonRefining, "node '" + n.id + "' at level " + std::to_string(k) +
                                         " has no children (every node needs >= 1)");
  }
  if (levels[K].empty()) fail(ErrorCode::NonRefining, "no terminal atoms");

  // Probabilities: leaves must declare p > 0; internal values are sums over
  // children and must match any declared value; the root carries mass 1.
  for (int i = 0; i < static_cast<int>(levels[K].size()); ++i) {
    if (!declared[K][i].has_value())
      fail(ErrorCode::ScenarioInvalid, "terminal atom '" + levels[K][i].id + "' has no p");
    const double p = *declared[K][i];
    if (!(p > 0.0))
      fail(ErrorCode::ZeroProbabilityAtom, "atom '" + levels[K][i].id + "' has p <= 0");
    levels[K][i].p = p;
  }
  const double prob_tol = 1e-9;
  for (int k = K - 1; k >= 0; --k) {
    for (int i = 0; i < static_cast<int>(levels[k].size()); ++i) {
      double s = 0.0;
      for (int c : levels[k][i].children) s += levels[k + 1][c].p;
      if (declared[k][i].has_value() && std::fabs(*declared[k][i] - s) > prob_tol) {
        std::ostringstream msg;
        msg << "node '" << levels[k][i].id << "' declares p=" << *declared[k][i]
            << " but children sum to " << s;
        fail(ErrorCode::ProbabilityMismatch, msg.str());
      }
      levels[k][i].p = s;
    }
  }
  if (std::fabs(levels[0][0].p - 1.0) > prob_tol) {
    std::ostringstream msg;
    msg << "total probability is " << levels[0][0].p << ", expected 1";
    fail(ErrorCode::ProbabilityMismatch, msg.str());
  }

  return FilteredSpace(TimeGrid{spec.times, spec.mu}, std::move(levels));
}

RandomVariable constant_rv(const FilteredSpace& sp, int level, double c) {
  return RandomVariable{level, std::vector<double>(sp.node_count(level), c)};
}

RandomVariable conditional_expectation(const FilteredSpace& sp, const RandomVariable& x, int k) {
  if (k > x.level)
    fail(ErrorCode::LevelOrder, "conditioning level " + std::to_string(k) +
                                    " is finer than the variable's level " +
                                    std::to_string(x.level));
  RandomVariable cur = x;
  for (int l = x.level; l > k; --l) {
    RandomVariable coarse{l - 1, std::vector<double>(sp.node_count(l - 1), 0.0)};
    for (int v = 0; v < sp.node_count(l - 1); ++v) {
      const Node& n = sp.node(l - 1, v);
      double acc = 0.0;
      for (int c : n.children) acc += sp.node(l, c).p * cur[c];
      coarse[v] = acc / n.p;
    }
    cur = std::move(coarse);
  }
  return cur;
}

double expectation(const FilteredSpace& sp, const RandomVariable& x) {
  return conditional_expectation(sp, x, 0)[0];
}

RandomVariable stieltjes_integral(const FilteredSpace& sp, const PredictableProcess& h, int a,
                                  int b) {
  if (a > b) fail(ErrorCode::LevelOrder, "integral bounds out of order");
  RandomVariable acc = constant_rv(sp, a, 0.0);
  for (int k = a + 1; k <= b; ++k) {
    const RandomVariable& hk = h.step(k);  // level k-1
    RandomVariable next{k, std::vector<double>(sp.node_count(k), 0.0)};
    for (int c = 0; c < sp.node_count(k); ++c) {
      const int v = sp.node(k, c).parent;
      next[c] = acc[v] + hk[v] * sp.grid().dmu(k);
    }
    acc = std::move(next);
  }
  return acc;
}

RandomVariable lift(const FilteredSpace& sp, const RandomVariable& x, int k) {
  if (k < x.level) fail(ErrorCode::LevelOrder, "lift target is coarser than the variable");
  RandomVariable cur = x;
  for (int l = x.level; l < k; ++l) {
    RandomVariable fine{l + 1, std::vector<double>(sp.node_count(l + 1), 0.0)};
    for (int c = 0; c < sp.node_count(l + 1); ++c) fine[c] = cur[sp.node(l + 1, c).parent];
    cur = std::move(fine);
  }
  return cur;
}

RandomVariable rv_add(const RandomVariable& a, const RandomVariable& b) {
  RandomVariable r = a;
  for (int i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

RandomVariable rv_sub(const RandomVariable& a, const RandomVariable& b) {
  RandomVariable r = a;
  for (int i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

RandomVariable rv_scale(const RandomVariable& a, double s) {
  RandomVariable r = a;
  for (auto& v : r.values) v *= s;
  return r;
}

RandomVariable rv_shift(const RandomVariable& a, double s) {
  RandomVariable r = a;
  for (auto& v : r.values) v += s;
  return r;
}

double max_abs_diff(const RandomVariable& a, const RandomVariable& b) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace gexpect
