#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "flwire/harness/experiment.hpp"

namespace flwire::harness {
namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Sample standard deviation; 0 for fewer than two values.
double sd_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

bool same_decision(const opt::AllocationDecision& a, const opt::AllocationDecision& b) {
  return a.rb == b.rb && a.power_w == b.power_w && a.per == b.per &&
         a.delay_s == b.delay_s && a.energy_j == b.energy_j &&
         a.sample_counts == b.sample_counts && a.rb_count == b.rb_count &&
         a.objective == b.objective && a.solver_iterations == b.solver_iterations;
}

fl::TrainingOptions training_options(const ExperimentConfig& config,
                                     const fl::Dataset& dataset) {
  fl::TrainingOptions opts;
  opts.rounds = config.training.rounds;
  opts.learning_rate = config.training.fixed_learning_rate
                           ? *config.training.fixed_learning_rate
                           : 1.0 / analysis::curvature(dataset).lipschitz_L;
  if (!config.training.initial_model.empty()) {
    opts.initial = fl::ModelVector(config.training.initial_model);
  }
  return opts;
}

// All algorithms for one seed share the topology, data and edge weights.
std::vector<RunRecord> run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const phy::Topology topology = build_topology(config, seed);
  const fl::Dataset dataset = build_dataset(config, seed);
  const fl::TrainingOptions opts = training_options(config, dataset);
  const opt::EdgeWeightMatrix weights = opt::build_edge_weights(topology);

  std::vector<RunRecord> out;
  out.reserve(config.algorithms.size());
  for (Algorithm algo : config.algorithms) {
    const auto started = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.algorithm = algo;
    rec.seed = seed;
    rec.decision = allocate(algo, topology, weights, seed);
    rec.degenerate = rec.decision.selected_count() == 0;
    rec.learning_rate = opts.learning_rate;

    Rng channel(derive_seed(seed, streams::transmission));
    const fl::TrainingTrace trace = fl::run_training(dataset, rec.decision, opts, channel);
    rec.initial_loss = trace.initial_loss;
    rec.losses.reserve(trace.rounds.size());
    for (const auto& r : trace.rounds) rec.losses.push_back(r.loss);

    if (config.bound.enabled) {
      rec.bound = run_bound_study(dataset, topology, rec.decision, opts, seed,
                                  config.bound.runs);
    }
    rec.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

std::vector<double> place_users(Rng& rng, int count, double radius_m) {
  if (count < 1) throw std::invalid_argument("place_users: count must be >= 1");
  if (!(radius_m > 0.0)) throw std::invalid_argument("place_users: radius must be > 0");
  std::vector<double> d(static_cast<std::size_t>(count));
  for (double& x : d) x = radius_m * std::sqrt(rng.uniform_positive());
  return d;
}

std::vector<int> sample_counts_for(const UserSpec& users) {
  std::vector<int> k(static_cast<std::size_t>(users.count));
  for (std::size_t i = 0; i < k.size(); ++i) {
    k[i] = users.sample_counts[i % users.sample_counts.size()];
  }
  return k;
}

phy::Topology build_topology(const ExperimentConfig& config, std::uint64_t seed) {
  phy::Topology t;
  t.params = resolved_network(config);
  t.fexp = config.fading;
  const UserSpec& spec = config.users;
  std::vector<double> distances = spec.distances_m;
  if (distances.empty()) {
    Rng rng(derive_seed(seed, streams::placement));
    distances = place_users(rng, spec.count, spec.radius_m);
  }
  const std::vector<int> counts = sample_counts_for(spec);
  t.users.resize(static_cast<std::size_t>(spec.count));
  for (std::size_t i = 0; i < t.users.size(); ++i) {
    phy::UserProfile& u = t.users[i];
    u.distance_m = distances[i];
    u.fading_scale = spec.fading_scale;
    u.sample_count = counts[i];
    u.cpu_cycles_per_bit = spec.cpu_cycles_per_bit;
    u.cpu_freq_hz = spec.cpu_freq_hz;
    u.energy_coeff = spec.energy_coeff;
    u.payload_bits = spec.payload_bits;
  }
  return t;
}

fl::Dataset build_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  Rng rng(derive_seed(seed, streams::dataset));
  const std::vector<int> counts = sample_counts_for(config.users);
  return fl::generate_regression_data(rng, counts, config.task);
}

opt::AllocationDecision allocate(Algorithm algorithm, const phy::Topology& topology,
                                 const opt::EdgeWeightMatrix& weights,
                                 std::uint64_t seed) {
  // Each baseline gets its own stream so the algorithm list order does not
  // change what any one of them draws.
  Rng rng(derive_seed(derive_seed(seed, streams::baseline),
                      static_cast<std::uint64_t>(algorithm)));
  switch (algorithm) {
    case Algorithm::proposed: return opt::hungarian_assign(weights);
    case Algorithm::baseline_a: return opt::baseline_optselect_randomrb(rng, weights);
    case Algorithm::baseline_b: return opt::baseline_random_all(rng, weights, topology);
    case Algorithm::baseline_c: return opt::baseline_min_sum_per(weights);
  }
  throw std::logic_error("allocate: unknown algorithm");
}

bool BoundSummary::operator==(const BoundSummary& o) const {
  return curvature.lipschitz_L == o.curvature.lipschitz_L &&
         curvature.strong_convexity_mu == o.curvature.strong_convexity_mu &&
         fit.zeta1 == o.fit.zeta1 && fit.zeta2 == o.fit.zeta2 &&
         fit.samples_used == o.fit.samples_used && A == o.A &&
         asymptotic.value == o.asymptotic.value &&
         asymptotic.converges == o.asymptotic.converges &&
         zeta2_threshold == o.zeta2_threshold && optimal_loss == o.optimal_loss &&
         runs == o.runs && bound == o.bound && empirical_gap == o.empirical_gap;
}

BoundSummary run_bound_study(const fl::Dataset& dataset, const phy::Topology& topology,
                             const opt::AllocationDecision& decision,
                             const fl::TrainingOptions& options, std::uint64_t seed,
                             int runs) {
  if (runs < 1) throw std::invalid_argument("run_bound_study: runs must be >= 1");
  BoundSummary s;
  s.runs = runs;
  s.curvature = analysis::curvature(dataset);
  s.optimal_loss = fl::global_loss(fl::least_squares_optimum(dataset), dataset);

  std::vector<fl::TrainingTrace> traces;
  traces.reserve(static_cast<std::size_t>(runs));
  const std::uint64_t base = derive_seed(seed, streams::transmission);
  for (int r = 0; r < runs; ++r) {
    Rng channel(derive_seed(base, static_cast<std::uint64_t>(r) + 1));
    traces.push_back(fl::run_training(dataset, decision, options, channel));
  }
  std::vector<fl::ModelVector> points;
  points.reserve(traces.size() * (traces.front().rounds.size() + 1));
  for (const auto& tr : traces) {
    for (auto& m : tr.models()) points.push_back(std::move(m));
  }

  const auto profile = analysis::WirelessProfile::from_decision(decision);
  s.fit = analysis::fit_zeta(dataset, points, profile, s.curvature);
  s.empirical_gap = analysis::empirical_gap(traces, s.optimal_loss);
  // Every run starts from the same g_0; taking the averaged value keeps
  // bound(0) and the empirical gap bit-identical at t = 0.
  const auto series = analysis::bound_series(profile, s.curvature, s.fit,
                                             s.empirical_gap.front(), options.rounds);
  s.A = series.A;
  s.asymptotic = series.asymptotic;
  s.bound = series.per_step;
  s.zeta2_threshold = analysis::zeta2_threshold(
      analysis::worst_case_load(topology, profile.selection), profile.total_samples());
  return s;
}

bool same_content(const RunRecord& a, const RunRecord& b) {
  return a.algorithm == b.algorithm && a.seed == b.seed &&
         same_decision(a.decision, b.decision) && a.learning_rate == b.learning_rate &&
         a.initial_loss == b.initial_loss && a.losses == b.losses &&
         a.degenerate == b.degenerate && a.bound == b.bound;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  validate(config);
  const std::size_t cells = config.seeds.size();
  std::vector<std::vector<RunRecord>> per_seed(cells);
  std::vector<std::exception_ptr> errors(cells);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells; k = next++) {
      try {
        per_seed[k] = run_seed(config, config.seeds[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.threads), cells);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<RunRecord> out;
  out.reserve(cells * config.algorithms.size());
  for (auto& recs : per_seed) {
    for (auto& r : recs) out.push_back(std::move(r));
  }
  return out;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::user_count: return "user_count";
    case SweepAxis::rb_count: return "rb_count";
    case SweepAxis::samples_per_user: return "samples_per_user";
  }
  return "user_count";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::user_count, SweepAxis::rb_count, SweepAxis::samples_per_user}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

ExperimentConfig with_axis_value(const ExperimentConfig& config, SweepAxis axis, int value) {
  if (value < 1) {
    throw ConfigError("sweep value " + std::to_string(value) + ": must be >= 1");
  }
  ExperimentConfig c = config;
  switch (axis) {
    case SweepAxis::user_count:
      if (!c.users.distances_m.empty()) {
        throw ConfigError("users.distances_m: cannot sweep user_count with explicit distances");
      }
      c.users.count = value;
      break;
    case SweepAxis::rb_count:
      if (!c.network.uplink_interference_w.empty()) {
        throw ConfigError(
            "network.uplink_interference_w: cannot sweep rb_count with per-RB interference");
      }
      c.network.rb_count = value;
      break;
    case SweepAxis::samples_per_user:
      c.users.sample_counts = {value};
      break;
  }
  validate(c);
  return c;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            std::span<const int> values) {
  if (values.empty()) throw ConfigError("sweep: --values must not be empty");
  std::vector<SweepRow> rows;
  for (int v : values) {
    const ExperimentConfig c = with_axis_value(config, axis, v);
    const std::vector<RunRecord> records = run_experiment(c);
    for (Algorithm algo : c.algorithms) {
      std::vector<double> losses;
      std::vector<double> iterations;
      for (const auto& r : records) {
        if (r.algorithm != algo) continue;
        losses.push_back(r.final_loss());
        iterations.push_back(static_cast<double>(r.decision.solver_iterations));
      }
      SweepRow row;
      row.axis = axis;
      row.value = v;
      row.algorithm = algo;
      row.runs = static_cast<int>(losses.size());
      row.mean_final_loss = mean_of(losses);
      row.sd_final_loss = sd_of(losses);
      row.mean_iterations = mean_of(iterations);
      row.sd_iterations = sd_of(iterations);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace flwire::harness
