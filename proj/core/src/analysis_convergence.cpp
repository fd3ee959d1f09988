#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "flwire/analysis/convergence.hpp"
#include "flwire/opt/assignment.hpp"
#include "flwire/phy/link.hpp"

namespace flwire::analysis {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// ||grad f(g; x, y)||^2 = (x^T g - y)^2 ||x||^2
double sample_gradient_sq(const fl::ModelVector& g, std::span<const double> x,
                          double y) {
  double r = -y;
  for (std::size_t j = 0; j < x.size(); ++j) r += x[j] * g[j];
  return r * r * squared_norm(x);
}

struct PointStats {
  double max_sample_sq = 0.0;  // max over samples of ||grad f||^2
  double global_sq = 0.0;      // ||grad F(g)||^2
};

PointStats point_stats(const fl::Dataset& ds, const fl::ModelVector& g) {
  PointStats s;
  for (const auto& u : ds.users) {
    for (std::size_t k = 0; k < u.sample_count(); ++k) {
      s.max_sample_sq = std::max(s.max_sample_sq, sample_gradient_sq(g, u.row(k), u.targets[k]));
    }
  }
  s.global_sq = squared_norm(fl::global_gradient(g, ds).values());
  return s;
}

}  // namespace

CurvatureEstimate curvature(const fl::Dataset& dataset) {
  const std::size_t d = dataset.dim;
  const double k = static_cast<double>(dataset.total_samples());
  if (d == 0 || k == 0.0) throw std::domain_error("curvature: empty dataset");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                            static_cast<Eigen::Index>(d));
  for (const auto& u : dataset.users) {
    for (std::size_t s = 0; s < u.sample_count(); ++s) {
      const auto x = u.row(s);
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) h(r, c) += x[r] * x[c];
    }
  }
  h /= k;

  double lmax = 0.0;
  double lmin = 0.0;
  if (d == 1) {
    lmax = lmin = h(0, 0);
  } else if (d == 2) {
    const double a = h(0, 0), b = h(0, 1), c = h(1, 1);
    const double mean = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    lmax = mean + rad;
    // det / lmax avoids cancellation in mean - rad
    lmin = lmax > 0.0 ? (a * c - b * b) / lmax : 0.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    lmin = es.eigenvalues()(0);
    lmax = es.eigenvalues()(static_cast<Eigen::Index>(d) - 1);
  }
  if (!(lmax > 0.0) || !(lmin > 1e-12 * lmax)) {
    std::ostringstream os;
    os << "curvature: pooled Hessian is singular (mu = " << lmin << ", L = " << lmax
       << "); the loss is not strongly convex on this data";
    throw std::domain_error(os.str());
  }
  return {lmax, lmin};
}

WirelessProfile WirelessProfile::from_decision(const opt::AllocationDecision& decision) {
  return {decision.selection(), decision.per, decision.sample_counts};
}

int WirelessProfile::total_samples() const {
  int k = 0;
  for (int x : sample_counts) k += x;
  return k;
}

double WirelessProfile::load() const {
  double s = 0.0;
  for (std::size_t i = 0; i < sample_counts.size(); ++i) {
    const double a = selection[i] ? 1.0 : 0.0;
    s += sample_counts[i] * (1.0 - a + a * per[i]);
  }
  return s;
}

double convergence_factor(const WirelessProfile& profile,
                          const CurvatureEstimate& curv, double zeta2) {
  const double L = curv.lipschitz_L;
  const double mu = curv.strong_convexity_mu;
  const double K = profile.total_samples();
  return 1.0 - mu / L + (4.0 * mu * zeta2 / (L * K)) * profile.load();
}

BoundValue loss_gap_bound(int t, double A, double zeta1,
                          const WirelessProfile& profile,
                          const CurvatureEstimate& curv, double initial_gap) {
  if (t < 0) throw std::invalid_argument("loss_gap_bound: t must be >= 0");
  if (t == 0) return {initial_gap, A == 1.0};
  const double c =
      2.0 * zeta1 * profile.load() / (curv.lipschitz_L * profile.total_samples());
  if (A == 1.0) return {initial_gap + t * c, true};
  const double at = std::pow(A, t);
  return {at * initial_gap + c * (1.0 - at) / (1.0 - A), false};
}

GapValue asymptotic_gap(const WirelessProfile& profile,
                        const CurvatureEstimate& curv, double zeta1,
                        double zeta2) {
  const double L = curv.lipschitz_L;
  const double mu = curv.strong_convexity_mu;
  const double K = profile.total_samples();
  const double s = profile.load();
  const double denom = mu / L - (4.0 * mu * zeta2 / (L * K)) * s;
  if (!(denom > 0.0)) return {kInf, false};
  return {(2.0 * zeta1 * s / (L * K)) / denom, true};
}

GradientBoundFit fit_zeta(const fl::Dataset& dataset,
                          std::span<const fl::ModelVector> trajectory,
                          const WirelessProfile& profile,
                          const CurvatureEstimate& curv, int grid_points) {
  if (trajectory.size() < 2) {
    throw std::invalid_argument("fit_zeta: need at least two trajectory points");
  }
  if (grid_points < 1) throw std::invalid_argument("fit_zeta: grid_points must be >= 1");

  std::vector<PointStats> stats;
  stats.reserve(trajectory.size());
  for (const auto& g : trajectory) stats.push_back(point_stats(dataset, g));

  auto zeta1_for = [&](double z2) {
    double z1 = 0.0;
    for (const auto& p : stats) z1 = std::max(z1, p.max_sample_sq - z2 * p.global_sq);
    return z1;
  };

  const double s = profile.load();
  const double limit = s > 0.0 ? profile.total_samples() / (4.0 * s) : 0.0;
  GradientBoundFit best{zeta1_for(0.0), 0.0, 0};
  double best_gap = asymptotic_gap(profile, curv, best.zeta1, 0.0).value;
  if (s > 0.0) {
    for (int j = 1; j < grid_points; ++j) {
      const double z2 = limit * j / grid_points;
      const double z1 = zeta1_for(z2);
      const GapValue gap = asymptotic_gap(profile, curv, z1, z2);
      if (gap.converges && gap.value < best_gap) {
        best = {z1, z2, 0};
        best_gap = gap.value;
      }
    }
  }

  // Rounding in zeta1_for can leave a sample a few ulps above the bound.
  for (std::size_t p = 0; p < trajectory.size(); ++p) {
    const auto& g = trajectory[p];
    for (const auto& u : dataset.users) {
      for (std::size_t k = 0; k < u.sample_count(); ++k) {
        const double lhs = sample_gradient_sq(g, u.row(k), u.targets[k]);
        while (lhs > best.zeta1 + best.zeta2 * stats[p].global_sq) {
          best.zeta1 = std::nextafter(best.zeta1, kInf);
        }
      }
    }
  }
  best.samples_used = trajectory.size() * dataset.total_samples();
  return best;
}

std::size_t count_zeta_violations(const fl::Dataset& dataset,
                                  std::span<const fl::ModelVector> trajectory,
                                  double zeta1, double zeta2) {
  std::size_t violations = 0;
  for (const auto& g : trajectory) {
    const double global_sq = squared_norm(fl::global_gradient(g, dataset).values());
    for (const auto& u : dataset.users) {
      for (std::size_t k = 0; k < u.sample_count(); ++k) {
        if (sample_gradient_sq(g, u.row(k), u.targets[k]) > zeta1 + zeta2 * global_sq) {
          ++violations;
        }
      }
    }
  }
  return violations;
}

double worst_case_load(const phy::Topology& topology,
                       std::span<const std::uint8_t> selection) {
  const auto& users = topology.users;
  if (selection.size() != users.size()) {
    throw std::invalid_argument("worst_case_load: selection size mismatch");
  }
  const auto& params = topology.params;
  const std::size_t R = static_cast<std::size_t>(params.rb_count);

  double load = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (selection[i]) {
      rows.push_back(i);
    } else {
      load += users[i].sample_count;
    }
  }
  if (rows.empty()) return load;

  // Cost -K_i q_i(P_min) on feasible edges; infeasible edges are priced
  // above any feasible matching so they are used only when unavoidable, and
  // then count as a certain loss (q = 1).
  const double big = 2.0 * topology.total_samples() + 1.0;
  Grid<double> cost(rows.size(), R, big);
  Grid<double> loss(rows.size(), R, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& user = users[rows[r]];
    for (std::size_t n = 0; n < R; ++n) {
      loss(r, n) = user.sample_count;
      const int rb = static_cast<int>(n);
      const auto edge = opt::evaluate_edge(user, rb, params, topology.fexp);
      if (!edge.feasible) continue;
      const auto p_min =
          opt::min_delay_feasible_power(user, rb, edge.power_w, params, topology.fexp);
      const double q = phy::packet_error_rate(user, rb, p_min.value_or(edge.power_w),
                                              params, topology.fexp);
      loss(r, n) = user.sample_count * q;
      cost(r, n) = -loss(r, n);
    }
  }
  const auto sol = opt::solve_assignment(cost);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int n = sol.row_to_col[r];
    load += n >= 0 ? loss(r, static_cast<std::size_t>(n)) : users[rows[r]].sample_count;
  }
  return load;
}

double zeta2_threshold(double worst_load, int total_samples) {
  if (!(worst_load > 0.0)) return kInf;
  return total_samples / (4.0 * worst_load);
}

bool zeta2_feasible(double zeta2, double threshold) { return zeta2 < threshold; }

std::vector<double> empirical_gap(std::span<const fl::TrainingTrace> traces,
                                  double optimal_loss) {
  if (traces.empty()) throw std::invalid_argument("empirical_gap: no trajectories");
  const std::size_t steps = traces.front().rounds.size() + 1;
  std::vector<double> mean(steps, 0.0);
  for (const auto& tr : traces) {
    if (tr.rounds.size() + 1 != steps) {
      throw std::invalid_argument("empirical_gap: trajectories differ in length");
    }
    mean[0] += tr.initial_loss - optimal_loss;
    for (std::size_t t = 1; t < steps; ++t) mean[t] += tr.rounds[t - 1].loss - optimal_loss;
  }
  for (double& m : mean) m /= static_cast<double>(traces.size());
  return mean;
}

BoundSeries bound_series(const WirelessProfile& profile,
                         const CurvatureEstimate& curv,
                         const GradientBoundFit& fit, double initial_gap,
                         int steps) {
  BoundSeries out;
  out.inputs = profile;
  out.A = convergence_factor(profile, curv, fit.zeta2);
  out.asymptotic = asymptotic_gap(profile, curv, fit.zeta1, fit.zeta2);
  out.per_step.reserve(static_cast<std::size_t>(steps) + 1);
  for (int t = 0; t <= steps; ++t) {
    const BoundValue b = loss_gap_bound(t, out.A, fit.zeta1, profile, curv, initial_gap);
    out.per_step.push_back(b.value);
    out.degenerate = out.degenerate || b.degenerate;
  }
  return out;
}

}  // namespace flwire::analysis
