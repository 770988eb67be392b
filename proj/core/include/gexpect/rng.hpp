#pragma once

#include <cstdint>

namespace gexpect {

// SplitMix64. Deterministic across platforms, which ctest golden files and
// seeded fuzz reports rely on; std:: distributions are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  // Deterministic fan-out: child stream `index` of this seed.
  static Rng derive(std::uint64_t master_seed, std::uint64_t index) {
    Rng mix(master_seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return Rng(mix.next_u64());
  }

 private:
  std::uint64_t state_;
};

}  // namespace gexpect
