#pragma once

#include <cmath>
#include <vector>

#include "flwire/phy/params.hpp"
#include "flwire/random.hpp"

namespace flwire::phy {

// Fixed-node rule for integrals against the unit exponential density:
//   integral_0^inf g(x) e^{-x} dx  ~=  sum_k weight[k] * g(node[k]).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Nodes are placed uniformly in log(x) over [-24, 3.9] (x = e^s, trapezoid
// in s), which resolves integrands whose structure sits far below the
// smallest Laguerre node, e.g. 1 - exp(-b/x) with b ~ 1e-2.
// Rules are cached; the returned reference stays valid for the program
// lifetime. Requires node_count >= 16.
const QuadratureRule& exponential_quadrature(int node_count);

// E[g(o)] for o ~ Exponential(mean), evaluated per `fexp`.
template <typename Integrand>
double expect_exponential(const FadingExpectation& fexp, double mean,
                          Integrand&& g) {
  switch (fexp.method) {
    case FadingExpectation::Method::point_mass:
      return g(mean);
    case FadingExpectation::Method::monte_carlo: {
      Rng rng(fexp.seed);
      double sum = 0.0;
      for (int k = 0; k < fexp.node_or_sample_count; ++k) {
        sum += g(rng.exponential(mean));
      }
      return sum / fexp.node_or_sample_count;
    }
    case FadingExpectation::Method::quadrature:
    default: {
      const auto& rule = exponential_quadrature(fexp.node_or_sample_count);
      double sum = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        sum += rule.weights[k] * g(mean * rule.nodes[k]);
      }
      return sum;
    }
  }
}

}  // namespace flwire::phy
