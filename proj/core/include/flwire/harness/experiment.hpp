#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flwire/analysis/convergence.hpp"
#include "flwire/fl/training.hpp"
#include "flwire/harness/config.hpp"
#include "flwire/opt/allocation.hpp"
#include "flwire/phy/params.hpp"
#include "flwire/random.hpp"

namespace flwire::harness {

// Distances with density proportional to d on (0, radius].
std::vector<double> place_users(Rng& rng, int count, double radius_m);

// K_i for each user, cycling through users.sample_counts.
std::vector<int> sample_counts_for(const UserSpec& users);

phy::Topology build_topology(const ExperimentConfig& config, std::uint64_t seed);
fl::Dataset build_dataset(const ExperimentConfig& config, std::uint64_t seed);

opt::AllocationDecision allocate(Algorithm algorithm, const phy::Topology& topology,
                                 const opt::EdgeWeightMatrix& weights,
                                 std::uint64_t seed);

struct BoundSummary {
  analysis::CurvatureEstimate curvature;
  analysis::GradientBoundFit fit;
  double A = 0.0;
  analysis::GapValue asymptotic;
  double zeta2_threshold = 0.0;
  double optimal_loss = 0.0;
  int runs = 0;
  std::vector<double> bound;          // t = 0..T
  std::vector<double> empirical_gap;  // t = 0..T

  bool operator==(const BoundSummary&) const;
};

// `runs` independent delivery realisations of the same allocation, the
// fitted gradient-bound constants and the resulting bound series.
BoundSummary run_bound_study(const fl::Dataset& dataset, const phy::Topology& topology,
                             const opt::AllocationDecision& decision,
                             const fl::TrainingOptions& options, std::uint64_t seed,
                             int runs);

struct RunRecord {
  Algorithm algorithm = Algorithm::proposed;
  std::uint64_t seed = 0;
  opt::AllocationDecision decision;
  double learning_rate = 0.0;
  double initial_loss = 0.0;
  std::vector<double> losses;  // F(g_t), t = 1..T
  bool degenerate = false;     // nobody could be scheduled
  std::optional<BoundSummary> bound;
  double wall_clock_s = 0.0;

  double final_loss() const { return losses.empty() ? initial_loss : losses.back(); }
};

// Everything that is persisted; wall-clock time is not compared.
bool same_content(const RunRecord& a, const RunRecord& b);

// Records ordered seed-major, then by the configured algorithm order,
// independent of config.threads.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

enum class SweepAxis { user_count, rb_count, samples_per_user };

std::string_view to_string(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(std::string_view name);

struct SweepRow {
  SweepAxis axis = SweepAxis::user_count;
  int value = 0;
  Algorithm algorithm = Algorithm::proposed;
  int runs = 0;
  double mean_final_loss = 0.0;
  double sd_final_loss = 0.0;
  double mean_iterations = 0.0;
  double sd_iterations = 0.0;
};

ExperimentConfig with_axis_value(const ExperimentConfig& config, SweepAxis axis, int value);

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            std::span<const int> values);

}  // namespace flwire::harness
