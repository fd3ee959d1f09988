#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "flwire/phy/fading.hpp"

namespace flwire::phy {
namespace {

constexpr double kLogLower = -24.0;  // e^{-24}: mass below is < 4e-11
constexpr double kLogUpper = 3.9;    // e^{-e^{3.9}} ~ 4e-22

QuadratureRule build_rule(int n) {
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double h = (kLogUpper - kLogLower) / (n - 1);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = std::exp(kLogLower + h * k);
    double w = h * x * std::exp(-x);
    if (k == 0 || k == n - 1) w *= 0.5;
    rule.nodes[static_cast<std::size_t>(k)] = x;
    rule.weights[static_cast<std::size_t>(k)] = w;
    total += w;
  }
  // Exact for constants.
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

const QuadratureRule& exponential_quadrature(int node_count) {
  if (node_count < 16) {
    throw std::invalid_argument("node_or_sample_count: must be >= 16");
  }
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(node_count);
  if (it == cache.end()) {
    it = cache.emplace(node_count, build_rule(node_count)).first;
  }
  return it->second;
}

}  // namespace flwire::phy
