#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flwire/grid.hpp"
#include "flwire/phy/params.hpp"
#include "flwire/random.hpp"

namespace flwire::opt {

struct OptimalPower {
  double power_w = 0.0;
  // False when training energy alone exhausts the budget or no positive
  // power meets it; power_w is then 0.
  bool feasible_energy = false;
};

// P* = min{P_max, P_gammaE}, with P_gammaE the root of e(P) = gamma_E found
// by bisection (energy is strictly increasing in P). The returned power is
// the lower bisection bracket, so e(P*) <= gamma_E always holds.
OptimalPower optimal_power(const phy::UserProfile& user, int rb_index,
                           const phy::NetworkParams& params,
                           const phy::FadingExpectation& fexp);

// Smallest power in (0, upper_w] meeting the delay gate
// l^U(P) + l^D <= gamma_T, or nullopt when even upper_w misses it.
std::optional<double> min_delay_feasible_power(
    const phy::UserProfile& user, int rb_index, double upper_w,
    const phy::NetworkParams& params, const phy::FadingExpectation& fexp);

// Everything the matching needs to know about one (user, RB) pair at P*.
struct EdgeEvaluation {
  double power_w = 0.0;
  double per = 1.0;
  double uplink_delay_s = 0.0;
  double downlink_delay_s = 0.0;
  double energy_j = 0.0;
  bool feasible = false;  // delay and energy gates both hold at P*
  double weight = 0.0;    // K_i (q - 1) when feasible, else 0
};

EdgeEvaluation evaluate_edge(const phy::UserProfile& user, int rb_index,
                             const phy::NetworkParams& params,
                             const phy::FadingExpectation& fexp);

double edge_weight(const phy::UserProfile& user, int rb_index,
                   const phy::NetworkParams& params,
                   const phy::FadingExpectation& fexp);

struct EdgeWeightMatrix {
  Grid<EdgeEvaluation> edges;     // U x R
  std::vector<int> sample_counts; // K_i

  std::size_t user_count() const noexcept { return edges.rows(); }
  std::size_t rb_count() const noexcept { return edges.cols(); }
  double weight(std::size_t i, std::size_t n) const { return edges(i, n).weight; }
  bool feasible(std::size_t i, std::size_t n) const { return edges(i, n).feasible; }
  Grid<double> weight_grid() const;

  // Bare weight matrix (tests, synthetic instances): an edge is feasible iff
  // its weight is negative and its PER is recovered as 1 + weight / K_i.
  static EdgeWeightMatrix from_weights(const Grid<double>& weights,
                                       std::vector<int> sample_counts);
};

EdgeWeightMatrix build_edge_weights(const phy::Topology& topology);

struct AllocationDecision {
  std::vector<int> rb;             // assigned RB per user, -1 if unselected
  std::vector<double> power_w;
  std::vector<double> per;         // q_i; 0 for unselected users
  std::vector<double> delay_s;     // l^U + l^D; 0 for unselected users
  std::vector<double> energy_j;    // 0 for unselected users
  std::vector<int> sample_counts;
  int rb_count = 0;
  double objective = 0.0;          // sum_i K_i (1 - a_i + a_i q_i)
  std::uint64_t solver_iterations = 0;

  std::size_t user_count() const noexcept { return rb.size(); }
  bool selected(std::size_t i) const { return rb[i] >= 0; }
  std::size_t selected_count() const;
  std::vector<std::uint8_t> selection() const;
  Grid<std::uint8_t> rb_matrix() const;

  static AllocationDecision empty(std::vector<int> sample_counts, int rb_count);
};

// sum_i K_i (1 - a_i + a_i q_i) recomputed from the per-user fields.
double allocation_objective(const AllocationDecision& decision);

// Structural invariants (one RB per selected user, no shared RBs,
// 0 <= P <= P_max) plus the delay and energy gates re-evaluated at the
// recorded powers. Returns human-readable violations; empty means valid.
std::vector<std::string> check_feasibility(const AllocationDecision& decision,
                                           const phy::Topology& topology);

// Structural checks plus the recorded delay/energy against the budgets;
// used when the topology that produced the decision is not at hand.
std::vector<std::string> check_recorded_invariants(
    const AllocationDecision& decision, const phy::NetworkParams& params);

// Min-weight matching of users to RBs. Users matched through a
// non-negative edge are reported unselected; objective = sum K_i + sum psi.
AllocationDecision hungarian_assign(const EdgeWeightMatrix& weights);

// Exhaustive oracle for hungarian_assign; at most 8 users and 8 RBs.
AllocationDecision brute_force_assign(const EdgeWeightMatrix& weights);

// Proposed allocation for a topology: edge weights, then the matching.
AllocationDecision propose_allocation(const phy::Topology& topology);

// Baseline b: random users on random RBs with random powers in (0, P*];
// pairs that miss a gate at the drawn power are dropped.
AllocationDecision baseline_random_all(Rng& rng, const EdgeWeightMatrix& weights,
                                       const phy::Topology& topology);

// Baseline a: RBs in random order, users by descending K_i; each user takes
// the next RB if that edge is feasible at P*.
AllocationDecision baseline_optselect_randomrb(Rng& rng,
                                               const EdgeWeightMatrix& weights);

// Baseline c: matching that minimizes the unweighted sum of PERs over
// feasible edges (K_i ignored), at P*.
AllocationDecision baseline_min_sum_per(const EdgeWeightMatrix& weights);

}  // namespace flwire::opt
