#pragma once

#include <functional>

#include "gexpect/report.hpp"
#include "gexpect/scenario.hpp"

namespace gexpect {

// ===========================================================================
// The property battery: every check the engine must pass on seeded fuzzed
// spaces, with the exact finite-space oracles as ground truth. The
// acceptance suite runs it at the pinned scales; `gexpect suite` exposes it
// with a scale knob.
// ===========================================================================

struct BatteryOptions {
  std::uint64_t seed = 1;
  double scale = 1.0;  // multiplies trial counts (acceptance runs at 1)
  int threads = 0;     // 0 = hardware concurrency
};

// Each function appends its checks; together they cover the acceptance
// criteria one to twelve.
void battery_bsde_residual(const BatteryOptions& opts, std::vector<Check>& out);
void battery_linear_reduction(const BatteryOptions& opts, std::vector<Check>& out);
void battery_martingale_representation(const BatteryOptions& opts, std::vector<Check>& out);
void battery_comparison(const BatteryOptions& opts, std::vector<Check>& out);
void battery_doleans(const BatteryOptions& opts, std::vector<Check>& out);
void battery_gronwall(const BatteryOptions& opts, std::vector<Check>& out);
void battery_doob_meyer(const BatteryOptions& opts, std::vector<Check>& out);
void battery_drift_extraction(const BatteryOptions& opts, std::vector<Check>& out);
void battery_representation(const BatteryOptions& opts, std::vector<Check>& out);
void battery_negative_control(const BatteryOptions& opts, std::vector<Check>& out);
void battery_bound_checks(const BatteryOptions& opts, std::vector<Check>& out);
void battery_crossing_inequalities(const BatteryOptions& opts, std::vector<Check>& out);

Report run_suite(const BatteryOptions& opts);

// Scalar rho making r = rho I uniformly balanced on this basis with the
// given margin fraction (the balance product sup lands at `fraction`).
double balanced_scalar_rho(const MartingaleBasis& basis, double fraction);

// Deterministic trial fan-out helper shared by the battery criteria.
void parallel_trials(int n, int threads, const std::function<void(int)>& body);

}  // namespace gexpect
