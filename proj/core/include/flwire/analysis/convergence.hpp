#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flwire/fl/training.hpp"
#include "flwire/opt/allocation.hpp"
#include "flwire/phy/params.hpp"

namespace flwire::analysis {

struct CurvatureEstimate {
  double lipschitz_L = 0.0;
  double strong_convexity_mu = 0.0;
};

// Extreme eigenvalues of the pooled Hessian (1/K) sum x x^T. Throws
// std::domain_error when mu <= 1e-12 * L (rank-deficient design).
CurvatureEstimate curvature(const fl::Dataset& dataset);

// Selection a_i, PER q_i and K_i: the wireless inputs of the bound.
struct WirelessProfile {
  std::vector<std::uint8_t> selection;
  std::vector<double> per;
  std::vector<int> sample_counts;

  static WirelessProfile from_decision(const opt::AllocationDecision& decision);

  int total_samples() const;
  // S = sum_i K_i (1 - a_i + a_i q_i)
  double load() const;
};

double convergence_factor(const WirelessProfile& profile,
                          const CurvatureEstimate& curv, double zeta2);

struct BoundValue {
  double value = 0.0;
  bool degenerate = false;  // A == 1: linear growth form used
};

// Bound on E[F(g_t) - F(g*)], with bound(0) = initial_gap.
BoundValue loss_gap_bound(int t, double A, double zeta1,
                          const WirelessProfile& profile,
                          const CurvatureEstimate& curv, double initial_gap);

struct GapValue {
  double value = 0.0;      // +inf when !converges
  bool converges = false;  // denominator > 0, i.e. A < 1
};

GapValue asymptotic_gap(const WirelessProfile& profile,
                        const CurvatureEstimate& curv, double zeta1,
                        double zeta2);

struct GradientBoundFit {
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  std::size_t samples_used = 0;  // (sample, trajectory point) pairs checked
};

// Per-sample gradient bound ||grad f||^2 <= zeta1 + zeta2 ||grad F(g)||^2
// fitted over every model in `trajectory`. zeta2 is swept over a grid below
// the divergence threshold K / (4 S); for each grid value the smallest valid
// zeta1 is taken and the pair with the smallest asymptotic gap is kept.
// Requires at least two trajectory points.
GradientBoundFit fit_zeta(const fl::Dataset& dataset,
                          std::span<const fl::ModelVector> trajectory,
                          const WirelessProfile& profile,
                          const CurvatureEstimate& curv, int grid_points = 257);

// Independent pointwise re-check of a fit; returns the number of violations.
std::size_t count_zeta_violations(const fl::Dataset& dataset,
                                  std::span<const fl::ModelVector> trajectory,
                                  double zeta1, double zeta2);

// Largest S the given selection can produce: unselected users contribute
// K_i, selected users are re-matched over the feasible edges with q taken
// at the minimum delay-feasible power (the PER maximum over the feasible
// power range).
double worst_case_load(const phy::Topology& topology,
                       std::span<const std::uint8_t> selection);

// K / (4 W); +inf when W == 0.
double zeta2_threshold(double worst_load, int total_samples);
bool zeta2_feasible(double zeta2, double threshold);

// Per-step mean of F(g_t) - F(g*) over runs, t = 0..T.
std::vector<double> empirical_gap(std::span<const fl::TrainingTrace> traces,
                                  double optimal_loss);

struct BoundSeries {
  double A = 0.0;
  std::vector<double> per_step;  // t = 0..T
  GapValue asymptotic;
  bool degenerate = false;
  WirelessProfile inputs;
};

BoundSeries bound_series(const WirelessProfile& profile,
                         const CurvatureEstimate& curv,
                         const GradientBoundFit& fit, double initial_gap,
                         int steps);

}  // namespace flwire::analysis
