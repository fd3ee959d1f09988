#pragma once

#include <string>
#include <vector>

#include "flwire/harness/config.hpp"

namespace flwire::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Invariant self-test battery on the topologies a config produces (first
// seed): allocation feasibility for every configured algorithm, Hungarian
// against exhaustive search, power-monotonicity of energy and PER,
// quadrature against Monte Carlo, optimal-power budget, gradient
// correctness, zeta2/A consistency and seed determinism.
std::vector<CheckResult> run_validation(const ExperimentConfig& config);

}  // namespace flwire::harness
