#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypstab/config.hpp"

namespace hypstab {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs the invariant battery: the resolvent identity and Neumann cross
/// check, positivity sweeps of both solvers, nilpotency, cross-solver
/// convergence, operator monotonicity/vanishing/positivity, the small-delay
/// implication, semigroup restart, linearity, radius monotonicity, and
/// criterion-vs-dynamics consistency. Items are deterministic given the
/// seed and reported in a fixed order.
std::vector<PropertyResult> run_verify_battery(const ExperimentConfig& cfg,
                                               std::uint64_t seed);

}  // namespace hypstab
