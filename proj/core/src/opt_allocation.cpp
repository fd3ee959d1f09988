#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "flwire/opt/allocation.hpp"
#include "flwire/opt/assignment.hpp"
#include "flwire/phy/link.hpp"

namespace flwire::opt {
namespace {

constexpr int kMaxBisection = 200;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Smallest power probed when checking that the energy budget has a root.
constexpr double kPowerFloorFraction = 1e-9;

// Builds a decision from a user -> RB matching, keeping only edges with a
// strictly negative weight.
AllocationDecision decision_from_matching(const EdgeWeightMatrix& w,
                                          const std::vector<int>& user_to_rb,
                                          std::uint64_t iterations) {
  AllocationDecision d = AllocationDecision::empty(
      w.sample_counts, static_cast<int>(w.rb_count()));
  double objective = 0.0;
  for (int k : w.sample_counts) objective += k;
  for (std::size_t i = 0; i < w.user_count(); ++i) {
    const int n = user_to_rb[i];
    if (n < 0) continue;
    const EdgeEvaluation& e = w.edges(i, static_cast<std::size_t>(n));
    if (!(e.weight < 0.0)) continue;
    d.rb[i] = n;
    d.power_w[i] = e.power_w;
    d.per[i] = e.per;
    d.delay_s[i] = e.uplink_delay_s + e.downlink_delay_s;
    d.energy_j[i] = e.energy_j;
    objective += e.weight;
  }
  d.objective = objective;
  d.solver_iterations = iterations;
  return d;
}

void select_at(AllocationDecision& d, std::size_t i, int n,
               const EdgeEvaluation& e) {
  d.rb[i] = n;
  d.power_w[i] = e.power_w;
  d.per[i] = e.per;
  d.delay_s[i] = e.uplink_delay_s + e.downlink_delay_s;
  d.energy_j[i] = e.energy_j;
}

std::vector<int> iota_vector(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

OptimalPower optimal_power(const phy::UserProfile& user, int rb_index,
                           const phy::NetworkParams& params,
                           const phy::FadingExpectation& fexp) {
  const double budget = params.energy_budget_j;
  if (phy::training_energy(user) >= budget) return {0.0, false};

  auto energy = [&](double p) {
    return phy::user_energy(user, rb_index, p, params, fexp);
  };
  const double p_max = params.max_user_power_w;
  if (energy(p_max) <= budget) return {p_max, true};

  double lo = p_max * kPowerFloorFraction;
  if (energy(lo) > budget) return {0.0, false};
  double hi = p_max;
  // Run to floating-point resolution; the 1e-9 J tolerance is met long
  // before the bracket collapses.
  for (int it = 0; it < kMaxBisection; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (energy(mid) <= budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, true};
}

std::optional<double> min_delay_feasible_power(
    const phy::UserProfile& user, int rb_index, double upper_w,
    const phy::NetworkParams& params, const phy::FadingExpectation& fexp) {
  const double downlink = phy::downlink_delay(user, params, fexp);
  auto meets = [&](double p) {
    return phy::uplink_delay(user, rb_index, p, params, fexp) + downlink <=
           params.delay_budget_s;
  };
  if (!(upper_w > 0.0) || !meets(upper_w)) return std::nullopt;
  double lo = 0.0;
  double hi = upper_w;
  for (int it = 0; it < kMaxBisection; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (meets(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

EdgeEvaluation evaluate_edge(const phy::UserProfile& user, int rb_index,
                             const phy::NetworkParams& params,
                             const phy::FadingExpectation& fexp) {
  EdgeEvaluation e;
  const OptimalPower op = optimal_power(user, rb_index, params, fexp);
  e.downlink_delay_s = phy::downlink_delay(user, params, fexp);
  if (!op.feasible_energy) {
    e.uplink_delay_s = kInf;
    e.energy_j = kInf;
    return e;
  }
  e.power_w = op.power_w;
  e.per = phy::packet_error_rate(user, rb_index, op.power_w, params, fexp);
  e.uplink_delay_s = phy::uplink_delay(user, rb_index, op.power_w, params, fexp);
  e.energy_j = phy::user_energy(user, rb_index, op.power_w, params, fexp);
  e.feasible = e.uplink_delay_s + e.downlink_delay_s <= params.delay_budget_s &&
               e.energy_j <= params.energy_budget_j;
  e.weight = e.feasible ? user.sample_count * (e.per - 1.0) : 0.0;
  return e;
}

double edge_weight(const phy::UserProfile& user, int rb_index,
                   const phy::NetworkParams& params,
                   const phy::FadingExpectation& fexp) {
  return evaluate_edge(user, rb_index, params, fexp).weight;
}

Grid<double> EdgeWeightMatrix::weight_grid() const {
  Grid<double> g(edges.rows(), edges.cols());
  for (std::size_t i = 0; i < edges.rows(); ++i)
    for (std::size_t n = 0; n < edges.cols(); ++n) g(i, n) = edges(i, n).weight;
  return g;
}

EdgeWeightMatrix EdgeWeightMatrix::from_weights(const Grid<double>& weights,
                                                std::vector<int> sample_counts) {
  EdgeWeightMatrix m;
  m.edges = Grid<EdgeEvaluation>(weights.rows(), weights.cols());
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    for (std::size_t n = 0; n < weights.cols(); ++n) {
      EdgeEvaluation& e = m.edges(i, n);
      e.weight = weights(i, n);
      e.feasible = weights(i, n) < 0.0;
      e.per = e.feasible ? 1.0 + weights(i, n) / sample_counts[i] : 1.0;
    }
  }
  m.sample_counts = std::move(sample_counts);
  return m;
}

EdgeWeightMatrix build_edge_weights(const phy::Topology& topology) {
  EdgeWeightMatrix m;
  const auto rbs = static_cast<std::size_t>(topology.params.rb_count);
  m.edges = Grid<EdgeEvaluation>(topology.users.size(), rbs);
  for (std::size_t i = 0; i < topology.users.size(); ++i) {
    m.sample_counts.push_back(topology.users[i].sample_count);
    for (std::size_t n = 0; n < rbs; ++n) {
      m.edges(i, n) = evaluate_edge(topology.users[i], static_cast<int>(n),
                                    topology.params, topology.fexp);
    }
  }
  return m;
}

std::size_t AllocationDecision::selected_count() const {
  return static_cast<std::size_t>(
      std::count_if(rb.begin(), rb.end(), [](int n) { return n >= 0; }));
}

std::vector<std::uint8_t> AllocationDecision::selection() const {
  std::vector<std::uint8_t> a(rb.size());
  for (std::size_t i = 0; i < rb.size(); ++i) a[i] = rb[i] >= 0 ? 1 : 0;
  return a;
}

Grid<std::uint8_t> AllocationDecision::rb_matrix() const {
  Grid<std::uint8_t> r(rb.size(), static_cast<std::size_t>(rb_count), 0);
  for (std::size_t i = 0; i < rb.size(); ++i) {
    if (rb[i] >= 0) r(i, static_cast<std::size_t>(rb[i])) = 1;
  }
  return r;
}

AllocationDecision AllocationDecision::empty(std::vector<int> sample_counts,
                                             int rb_count) {
  AllocationDecision d;
  const std::size_t u = sample_counts.size();
  d.rb.assign(u, -1);
  d.power_w.assign(u, 0.0);
  d.per.assign(u, 0.0);
  d.delay_s.assign(u, 0.0);
  d.energy_j.assign(u, 0.0);
  d.rb_count = rb_count;
  d.objective = std::accumulate(sample_counts.begin(), sample_counts.end(), 0.0);
  d.sample_counts = std::move(sample_counts);
  return d;
}

double allocation_objective(const AllocationDecision& d) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.user_count(); ++i) {
    const double a = d.selected(i) ? 1.0 : 0.0;
    total += d.sample_counts[i] * (1.0 - a + a * d.per[i]);
  }
  return total;
}

std::vector<std::string> check_recorded_invariants(
    const AllocationDecision& d, const phy::NetworkParams& params) {
  std::vector<std::string> out;
  auto fail = [&](std::size_t i, const std::string& what) {
    std::ostringstream os;
    os << "user " << i << ": " << what;
    out.push_back(os.str());
  };
  std::vector<int> owners(static_cast<std::size_t>(std::max(d.rb_count, 0)), -1);
  for (std::size_t i = 0; i < d.user_count(); ++i) {
    if (!(d.power_w[i] >= 0.0 && d.power_w[i] <= params.max_user_power_w)) {
      fail(i, "power outside [0, P_max]");
    }
    if (!d.selected(i)) {
      if (d.rb[i] != -1) fail(i, "invalid RB marker");
      continue;
    }
    const int n = d.rb[i];
    if (n >= d.rb_count) {
      fail(i, "RB index out of range");
      continue;
    }
    if (owners[static_cast<std::size_t>(n)] >= 0) {
      fail(i, "RB " + std::to_string(n) + " already held by user " +
                  std::to_string(owners[static_cast<std::size_t>(n)]));
    }
    owners[static_cast<std::size_t>(n)] = static_cast<int>(i);
    if (!(d.per[i] >= 0.0 && d.per[i] <= 1.0)) fail(i, "PER outside [0, 1]");
    if (!(d.delay_s[i] <= params.delay_budget_s)) fail(i, "delay budget exceeded");
    if (!(d.energy_j[i] <= params.energy_budget_j)) fail(i, "energy budget exceeded");
  }
  return out;
}

std::vector<std::string> check_feasibility(const AllocationDecision& d,
                                           const phy::Topology& topology) {
  std::vector<std::string> out = check_recorded_invariants(d, topology.params);
  if (d.user_count() != topology.users.size()) {
    out.push_back("decision covers " + std::to_string(d.user_count()) +
                  " users, topology has " +
                  std::to_string(topology.users.size()));
    return out;
  }
  for (std::size_t i = 0; i < d.user_count(); ++i) {
    if (!d.selected(i) || d.rb[i] >= d.rb_count) continue;
    const auto& user = topology.users[i];
    const double delay =
        phy::uplink_delay(user, d.rb[i], d.power_w[i], topology.params,
                          topology.fexp) +
        phy::downlink_delay(user, topology.params, topology.fexp);
    const double energy = phy::user_energy(user, d.rb[i], d.power_w[i],
                                           topology.params, topology.fexp);
    if (!(delay <= topology.params.delay_budget_s)) {
      out.push_back("user " + std::to_string(i) + ": re-evaluated delay " +
                    std::to_string(delay) + " s exceeds budget");
    }
    if (!(energy <= topology.params.energy_budget_j)) {
      out.push_back("user " + std::to_string(i) + ": re-evaluated energy " +
                    std::to_string(energy) + " J exceeds budget");
    }
  }
  return out;
}

AllocationDecision hungarian_assign(const EdgeWeightMatrix& weights) {
  const AssignmentSolution s = solve_assignment(weights.weight_grid());
  return decision_from_matching(weights, s.row_to_col, s.iterations);
}

AllocationDecision brute_force_assign(const EdgeWeightMatrix& weights) {
  const AssignmentSolution s = brute_force_assignment(weights.weight_grid());
  return decision_from_matching(weights, s.row_to_col, 0);
}

AllocationDecision propose_allocation(const phy::Topology& topology) {
  return hungarian_assign(build_edge_weights(topology));
}

AllocationDecision baseline_random_all(Rng& rng, const EdgeWeightMatrix& weights,
                                       const phy::Topology& topology) {
  AllocationDecision d = AllocationDecision::empty(
      weights.sample_counts, static_cast<int>(weights.rb_count()));
  std::vector<int> users = iota_vector(weights.user_count());
  std::vector<int> rbs = iota_vector(weights.rb_count());
  rng.shuffle(std::span<int>(users));
  rng.shuffle(std::span<int>(rbs));
  const std::size_t pairs = std::min(users.size(), rbs.size());
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto i = static_cast<std::size_t>(users[k]);
    const int n = rbs[k];
    // One draw per pair keeps the stream aligned whatever the outcome.
    const double fraction = rng.uniform_positive();
    const EdgeEvaluation& cap = weights.edges(i, static_cast<std::size_t>(n));
    if (!(cap.power_w > 0.0)) continue;
    const auto& user = topology.users[i];
    EdgeEvaluation e;
    e.power_w = cap.power_w * fraction;
    e.per = phy::packet_error_rate(user, n, e.power_w, topology.params,
                                   topology.fexp);
    e.uplink_delay_s =
        phy::uplink_delay(user, n, e.power_w, topology.params, topology.fexp);
    e.downlink_delay_s = cap.downlink_delay_s;
    e.energy_j =
        phy::user_energy(user, n, e.power_w, topology.params, topology.fexp);
    const bool ok =
        e.uplink_delay_s + e.downlink_delay_s <= topology.params.delay_budget_s &&
        e.energy_j <= topology.params.energy_budget_j && e.per < 1.0;
    if (ok) select_at(d, i, n, e);
  }
  d.objective = allocation_objective(d);
  return d;
}

AllocationDecision baseline_optselect_randomrb(Rng& rng,
                                               const EdgeWeightMatrix& weights) {
  AllocationDecision d = AllocationDecision::empty(
      weights.sample_counts, static_cast<int>(weights.rb_count()));
  std::vector<int> rbs = iota_vector(weights.rb_count());
  rng.shuffle(std::span<int>(rbs));
  std::vector<int> order = iota_vector(weights.user_count());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return weights.sample_counts[static_cast<std::size_t>(a)] >
           weights.sample_counts[static_cast<std::size_t>(b)];
  });
  std::size_t next_rb = 0;
  for (int user : order) {
    if (next_rb == rbs.size()) break;
    const auto i = static_cast<std::size_t>(user);
    const int n = rbs[next_rb];
    const EdgeEvaluation& e = weights.edges(i, static_cast<std::size_t>(n));
    if (e.feasible && e.weight < 0.0) {
      select_at(d, i, n, e);
      ++next_rb;
    }
  }
  d.objective = allocation_objective(d);
  return d;
}

AllocationDecision baseline_min_sum_per(const EdgeWeightMatrix& weights) {
  Grid<double> cost(weights.user_count(), weights.rb_count(), 0.0);
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    for (std::size_t n = 0; n < cost.cols(); ++n) {
      const EdgeEvaluation& e = weights.edges(i, n);
      if (e.feasible) cost(i, n) = e.per - 1.0;
    }
  }
  const AssignmentSolution s = solve_assignment(cost);
  AllocationDecision d = AllocationDecision::empty(
      weights.sample_counts, static_cast<int>(weights.rb_count()));
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    const int n = s.row_to_col[i];
    if (n < 0 || !(cost(i, static_cast<std::size_t>(n)) < 0.0)) continue;
    select_at(d, i, n, weights.edges(i, static_cast<std::size_t>(n)));
  }
  d.objective = allocation_objective(d);
  d.solver_iterations = s.iterations;
  return d;
}

}  // namespace flwire::opt
