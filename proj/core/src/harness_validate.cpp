#include <algorithm>
#include <cmath>
#include <sstream>

#include "flwire/harness/experiment.hpp"
#include "flwire/harness/validate.hpp"
#include "flwire/opt/assignment.hpp"
#include "flwire/phy/link.hpp"

namespace flwire::harness {
namespace {

CheckResult check(std::string name, bool ok, const std::string& detail) {
  return {std::move(name), ok, detail};
}

CheckResult allocation_feasibility(const ExperimentConfig& c, const phy::Topology& topo,
                                   const opt::EdgeWeightMatrix& w, std::uint64_t seed) {
  std::ostringstream os;
  std::size_t problems = 0;
  for (Algorithm a : c.algorithms) {
    const auto d = allocate(a, topo, w, seed);
    const auto v = opt::check_feasibility(d, topo);
    if (!v.empty() && problems == 0) os << to_string(a) << ": " << v.front();
    problems += v.size();
  }
  if (problems == 0) os << c.algorithms.size() << " allocations checked";
  return check("allocation_feasibility", problems == 0, os.str());
}

CheckResult hungarian_vs_exhaustive(const opt::EdgeWeightMatrix& w, Rng& rng) {
  int mismatches = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const std::size_t u = 1 + rng.index(std::min<std::size_t>(6, w.user_count()));
    const std::size_t r = 1 + rng.index(std::min<std::size_t>(6, w.rb_count()));
    Grid<double> g(u, r);
    std::vector<int> k(u);
    for (std::size_t i = 0; i < u; ++i) {
      const std::size_t src = rng.index(w.user_count());
      k[i] = w.sample_counts[src];
      for (std::size_t n = 0; n < r; ++n) g(i, n) = w.weight(src, rng.index(w.rb_count()));
    }
    const auto m = opt::EdgeWeightMatrix::from_weights(g, k);
    if (std::abs(opt::hungarian_assign(m).objective - opt::brute_force_assign(m).objective) > 1e-9) {
      ++mismatches;
    }
  }
  return check("hungarian_vs_exhaustive", mismatches == 0,
               std::to_string(mismatches) + " mismatches in " + std::to_string(trials) + " sub-instances");
}

CheckResult power_monotonicity(const phy::Topology& topo, Rng& rng) {
  int violations = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    const auto& u = topo.users[rng.index(topo.users.size())];
    const int n = static_cast<int>(rng.index(static_cast<std::size_t>(topo.params.rb_count)));
    const double p1 = topo.params.max_user_power_w * rng.uniform_positive();
    const double p2 = p1 + (topo.params.max_user_power_w - p1) * rng.uniform_positive();
    if (!(p2 > p1)) continue;
    const double e1 = phy::user_energy(u, n, p1, topo.params, topo.fexp);
    const double e2 = phy::user_energy(u, n, p2, topo.params, topo.fexp);
    const double q1 = phy::packet_error_rate(u, n, p1, topo.params, topo.fexp);
    const double q2 = phy::packet_error_rate(u, n, p2, topo.params, topo.fexp);
    if (!(e1 < e2) || q2 > q1) ++violations;
  }
  return check("power_monotonicity", violations == 0,
               std::to_string(violations) + " violations in " + std::to_string(trials) + " pairs");
}

CheckResult expectation_fidelity(const phy::Topology& topo, std::uint64_t seed) {
  if (topo.fexp.method != phy::FadingExpectation::Method::quadrature) {
    return check("expectation_fidelity", true, "skipped: fading method is not quadrature");
  }
  const auto mc = phy::FadingExpectation::monte_carlo(200'000, seed);
  double worst_per = 0.0, worst_rate = 0.0;
  for (std::size_t i = 0; i < topo.users.size(); i += std::max<std::size_t>(1, topo.users.size() / 4)) {
    const auto& u = topo.users[i];
    const int n = static_cast<int>(i % static_cast<std::size_t>(topo.params.rb_count));
    const double p = topo.params.max_user_power_w;
    worst_per = std::max(worst_per, std::abs(phy::packet_error_rate(u, n, p, topo.params, topo.fexp) -
                                             phy::packet_error_rate(u, n, p, topo.params, mc)));
    const double r_mc = phy::expected_uplink_rate(u, n, p, topo.params, mc);
    worst_rate = std::max(worst_rate, std::abs(phy::expected_uplink_rate(u, n, p, topo.params, topo.fexp) /
                                                   r_mc - 1.0));
  }
  std::ostringstream os;
  os << "max |dq| " << worst_per << ", max rate rel. error " << worst_rate;
  // 2e5 draws: allow ~3 standard errors on top of the quadrature error
  return check("expectation_fidelity", worst_per <= 3e-3 && worst_rate <= 1e-2, os.str());
}

CheckResult optimal_power_budget(const phy::Topology& topo, const opt::EdgeWeightMatrix& w) {
  int violations = 0;
  for (std::size_t i = 0; i < w.user_count(); ++i) {
    for (std::size_t n = 0; n < w.rb_count(); ++n) {
      const auto& e = w.edges(i, n);
      if (!(e.power_w > 0.0)) continue;
      if (phy::user_energy(topo.users[i], static_cast<int>(n), e.power_w, topo.params, topo.fexp) >
              topo.params.energy_budget_j + 1e-9 ||
          e.power_w > topo.params.max_user_power_w) {
        ++violations;
      }
    }
  }
  return check("optimal_power_budget", violations == 0, std::to_string(violations) + " edges over budget");
}

CheckResult gradient_correctness(const fl::Dataset& ds, Rng& rng) {
  double worst = 0.0;
  for (const auto& u : ds.users) {
    const fl::ModelVector w{4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0};
    const auto lg = fl::local_loss_and_gradient(w, u);
    for (std::size_t j = 0; j < w.dim(); ++j) {
      const double h = 1e-5;
      fl::ModelVector up = w, dn = w;
      up[j] += h;
      dn[j] -= h;
      const double fd = (fl::local_loss_and_gradient(up, u).loss - fl::local_loss_and_gradient(dn, u).loss) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(lg.gradient[j] - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  std::ostringstream os;
  os << "max relative error " << worst;
  return check("gradient_correctness", worst <= 1e-6, os.str());
}

CheckResult zeta2_consistency(const ExperimentConfig& c, const phy::Topology& topo,
                              const opt::EdgeWeightMatrix& w, const fl::Dataset& ds,
                              std::uint64_t seed) {
  int violations = 0;
  int feasible = 0;
  const auto curv = analysis::curvature(ds);
  fl::TrainingOptions opts;
  opts.rounds = std::min(c.training.rounds, 50);
  opts.learning_rate = 1.0 / curv.lipschitz_L;
  for (Algorithm a : c.algorithms) {
    const auto d = allocate(a, topo, w, seed);
    Rng channel(derive_seed(seed, streams::validation));
    const auto trace = fl::run_training(ds, d, opts, channel);
    const auto profile = analysis::WirelessProfile::from_decision(d);
    const auto fit = analysis::fit_zeta(ds, trace.models(), profile, curv);
    const double thr =
        analysis::zeta2_threshold(analysis::worst_case_load(topo, profile.selection), profile.total_samples());
    if (analysis::zeta2_feasible(fit.zeta2, thr)) {
      ++feasible;
      if (!(analysis::convergence_factor(profile, curv, fit.zeta2) < 1.0)) ++violations;
    }
  }
  return check("zeta2_consistency", violations == 0,
               std::to_string(feasible) + " feasible fits, " + std::to_string(violations) + " with A >= 1");
}

CheckResult determinism(const ExperimentConfig& c) {
  ExperimentConfig small = c;
  small.seeds = {c.seeds.front()};
  small.training.rounds = std::min(c.training.rounds, 20);
  small.bound.enabled = false;
  const auto a = run_experiment(small);
  small.threads = 2;
  const auto b = run_experiment(small);
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = same_content(a[i], b[i]);
  return check("determinism", same, same ? "repeat run identical" : "repeat run differs");
}

}  // namespace

std::vector<CheckResult> run_validation(const ExperimentConfig& config) {
  validate(config);
  const std::uint64_t seed = config.seeds.front();
  const phy::Topology topo = build_topology(config, seed);
  const fl::Dataset ds = build_dataset(config, seed);
  const auto w = opt::build_edge_weights(topo);
  Rng rng(derive_seed(seed, streams::validation));

  std::vector<CheckResult> out;
  out.push_back(allocation_feasibility(config, topo, w, seed));
  out.push_back(hungarian_vs_exhaustive(w, rng));
  out.push_back(power_monotonicity(topo, rng));
  out.push_back(expectation_fidelity(topo, seed));
  out.push_back(optimal_power_budget(topo, w));
  out.push_back(gradient_correctness(ds, rng));
  out.push_back(zeta2_consistency(config, topo, w, ds, seed));
  out.push_back(determinism(config));
  return out;
}

}  // namespace flwire::harness
