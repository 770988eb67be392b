#pragma once

#include <cstdint>

#include "gexpect/rng.hpp"
#include "gexpect/space.hpp"

namespace gexpect {

// Parameters for the seeded space generator. Bounds keep instances small
// enough that exhaustive path checks stay exact and fast.
struct SpaceParams {
  int depth = 3;            // K, 1..12
  int branch_lo = 2;        // children per node, 1..4
  int branch_hi = 3;
  double clock_lo = 0.25;   // dmu per step
  double clock_hi = 1.0;
  double weight_lo = 0.2;   // raw child weights before normalisation
};

inline constexpr int kMaxDepth = 12;
inline constexpr int kMaxBranching = 4;

// Deterministic function of the seed; ParamsOutOfRange / NoStep on bad params.
FilteredSpace random_space(std::uint64_t seed, const SpaceParams& params = {});

// Seeded terminal payoff with values in [lo, hi].
RandomVariable random_payoff(const FilteredSpace& sp, Rng& rng, double lo = -1.0, double hi = 1.0);

// Seeded level-k variable with values in [lo, hi].
RandomVariable random_rv(const FilteredSpace& sp, Rng& rng, int level, double lo = -1.0,
                         double hi = 1.0);

// Seeded adapted process (independent values per node).
AdaptedProcess random_adapted(const FilteredSpace& sp, Rng& rng, double lo = -1.0,
                              double hi = 1.0);

// Seeded predictable 0/1 indicator (per predictable atom).
PredictableProcess random_indicator(const FilteredSpace& sp, Rng& rng);

// Martingale with terminal value drawn at random: N_t = E[Q | F_t] - E[Q].
AdaptedProcess random_martingale(const FilteredSpace& sp, Rng& rng, double scale = 1.0);

}  // namespace gexpect
