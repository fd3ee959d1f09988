#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "flwire/opt/allocation.hpp"
#include "flwire/random.hpp"

namespace flwire::fl {

// Dense parameter vector (local model w_i or global model g).
class ModelVector {
 public:
  ModelVector() = default;
  explicit ModelVector(std::size_t dim, double fill = 0.0) : v_(dim, fill) {}
  explicit ModelVector(std::vector<double> values) : v_(std::move(values)) {}
  ModelVector(std::initializer_list<double> values) : v_(values) {}

  std::size_t dim() const noexcept { return v_.size(); }
  double& operator[](std::size_t k) { return v_[k]; }
  double operator[](std::size_t k) const { return v_[k]; }
  std::span<const double> values() const noexcept { return v_; }
  bool all_finite() const;

  bool operator==(const ModelVector&) const = default;

 private:
  std::vector<double> v_;
};

// One user's samples; each feature row already carries the trailing
// constant-1 bias entry.
struct UserData {
  std::size_t dim = 0;
  std::vector<double> features;  // sample-major, sample_count() x dim
  std::vector<double> targets;

  std::size_t sample_count() const noexcept { return targets.size(); }
  std::span<const double> row(std::size_t k) const {
    return {features.data() + k * dim, dim};
  }
};

struct Dataset {
  std::size_t dim = 0;
  std::vector<UserData> users;

  std::size_t total_samples() const;
};

// y = slope * x + intercept + noise * n, x ~ U[0, 1), n ~ N(0, 1).
struct RegressionTask {
  double slope = -2.0;
  double intercept = 1.0;
  double noise = 0.4;

  bool operator==(const RegressionTask&) const = default;
};

Dataset generate_regression_data(Rng& rng, std::span<const int> sample_counts,
                                 const RegressionTask& task = {});

struct LossAndGradient {
  double loss = 0.0;  // sum_k 1/2 (x_k^T w - y_k)^2
  ModelVector gradient;
};

// Throws std::invalid_argument on a dimension mismatch.
LossAndGradient local_loss_and_gradient(const ModelVector& model,
                                        const UserData& data);

// F(g) = (1/K) sum over every sample of every user.
double global_loss(const ModelVector& model, const Dataset& dataset);
ModelVector global_gradient(const ModelVector& model, const Dataset& dataset);

// w = g - (lambda / K_i) * grad F_i(g).
ModelVector local_update(const ModelVector& global, const UserData& data,
                         double learning_rate);

// Bernoulli(1 - q_i) delivery for selected users; unselected users never
// deliver. Draws one uniform per selected user, in user order.
std::vector<std::uint8_t> transmit(std::span<const std::uint8_t> selection,
                                   std::span<const double> per, Rng& rng);

// K-weighted mean of delivered local models; previous global when nothing
// was delivered.
ModelVector aggregate(std::span<const ModelVector> locals,
                      std::span<const std::uint8_t> delivered,
                      std::span<const int> sample_counts,
                      const ModelVector& previous_global);

// Least-squares minimizer of F over the pooled data (normal equations).
// Throws std::domain_error when the design matrix is rank deficient.
ModelVector least_squares_optimum(const Dataset& dataset);

struct RoundOutcome {
  int step = 0;                         // t, starting at 1
  std::vector<std::uint8_t> delivered;  // C(w_i)
  ModelVector global;                   // g_t
  double loss = 0.0;                    // F(g_t)
};

struct TrainingTrace {
  ModelVector initial;
  double initial_loss = 0.0;
  std::vector<RoundOutcome> rounds;

  std::vector<double> losses() const;  // F(g_0), F(g_1), ..., F(g_T)
  std::vector<ModelVector> models() const;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingOptions {
  double learning_rate = 0.0;
  int rounds = 1;
  ModelVector initial;  // empty means zeros
};

// Broadcast, local update, lossy upload, aggregation; repeated `rounds`
// times. Fully determined by its inputs and the generator state. Throws
// DivergenceError on a non-finite loss.
TrainingTrace run_training(const Dataset& dataset,
                           const opt::AllocationDecision& decision,
                           const TrainingOptions& options, Rng& rng);

}  // namespace flwire::fl
