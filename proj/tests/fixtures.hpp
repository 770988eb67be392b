#pragma once

#include "gexpect/space.hpp"

namespace gexpect::testing {

// One-step binary space: two atoms with p = 1/2, mu = (0, 1).
inline FilteredSpace make_s2() {
  SpaceSpec spec;
  spec.times = {0.0, 1.0};
  spec.mu = {0.0, 1.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  spec.nodes.push_back({"u", std::string("n0"), 0.5});
  spec.nodes.push_back({"d", std::string("n0"), 0.5});
  return build_space(spec);
}

// Two-step binary space with uniform quarters, mu = (0, 1, 2).
inline FilteredSpace make_s3() {
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
  return build_space(spec);
}

// One-step space with a uniform 3-child node.
inline FilteredSpace make_trinomial() {
  SpaceSpec spec;
  spec.times = {0.0, 1.0};
  spec.mu = {0.0, 1.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  const double third = 1.0 / 3.0;
  spec.nodes.push_back({"a", std::string("n0"), third});
  spec.nodes.push_back({"b", std::string("n0"), third});
  spec.nodes.push_back({"c", std::string("n0"), third});
  return build_space(spec);
}

// Deterministic space: a single child per node, two steps.
inline FilteredSpace make_deterministic() {
  SpaceSpec spec;
  spec.times = {0.0, 1.0, 2.0};
  spec.mu = {0.0, 0.5, 1.0};
  spec.nodes.push_back({"n0", std::nullopt, std::nullopt});
  spec.nodes.push_back({"a", std::string("n0"), std::nullopt});
  spec.nodes.push_back({"b", std::string("a"), 1.0});
  return build_space(spec);
}

}  // namespace gexpect::testing
