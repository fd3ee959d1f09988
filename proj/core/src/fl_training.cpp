#include <cmath>
#include <sstream>
#include <string>

#include "flwire/fl/training.hpp"

namespace flwire::fl {

bool ModelVector::all_finite() const {
  for (double x : v_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::size_t Dataset::total_samples() const {
  std::size_t k = 0;
  for (const auto& u : users) k += u.sample_count();
  return k;
}

Dataset generate_regression_data(Rng& rng, std::span<const int> sample_counts,
                                 const RegressionTask& task) {
  Dataset ds;
  ds.dim = 2;
  ds.users.reserve(sample_counts.size());
  for (int count : sample_counts) {
    UserData u;
    u.dim = 2;
    u.features.reserve(static_cast<std::size_t>(count) * 2);
    u.targets.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      const double x = rng.uniform();
      const double n = rng.standard_normal();
      u.features.push_back(x);
      u.features.push_back(1.0);
      u.targets.push_back(task.slope * x + task.intercept + task.noise * n);
    }
    ds.users.push_back(std::move(u));
  }
  return ds;
}

LossAndGradient local_loss_and_gradient(const ModelVector& model,
                                        const UserData& data) {
  if (model.dim() != data.dim) {
    std::ostringstream os;
    os << "model dimension " << model.dim() << " does not match data dimension "
       << data.dim;
    throw std::invalid_argument(os.str());
  }
  LossAndGradient out{0.0, ModelVector(data.dim)};
  for (std::size_t k = 0; k < data.sample_count(); ++k) {
    const auto x = data.row(k);
    double residual = -data.targets[k];
    for (std::size_t j = 0; j < data.dim; ++j) residual += x[j] * model[j];
    out.loss += 0.5 * residual * residual;
    for (std::size_t j = 0; j < data.dim; ++j) out.gradient[j] += residual * x[j];
  }
  return out;
}

double global_loss(const ModelVector& model, const Dataset& dataset) {
  double total = 0.0;
  for (const auto& u : dataset.users) total += local_loss_and_gradient(model, u).loss;
  return total / static_cast<double>(dataset.total_samples());
}

ModelVector global_gradient(const ModelVector& model, const Dataset& dataset) {
  ModelVector g(dataset.dim);
  for (const auto& u : dataset.users) {
    const auto lg = local_loss_and_gradient(model, u);
    for (std::size_t j = 0; j < dataset.dim; ++j) g[j] += lg.gradient[j];
  }
  const double k = static_cast<double>(dataset.total_samples());
  for (std::size_t j = 0; j < dataset.dim; ++j) g[j] /= k;
  return g;
}

ModelVector local_update(const ModelVector& global, const UserData& data,
                         double learning_rate) {
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning_rate must be >= 0");
  }
  ModelVector w = global;
  if (data.sample_count() == 0 || learning_rate == 0.0) return w;
  const auto lg = local_loss_and_gradient(global, data);
  const double scale = learning_rate / static_cast<double>(data.sample_count());
  for (std::size_t j = 0; j < w.dim(); ++j) w[j] -= scale * lg.gradient[j];
  return w;
}

std::vector<std::uint8_t> transmit(std::span<const std::uint8_t> selection,
                                   std::span<const double> per, Rng& rng) {
  std::vector<std::uint8_t> delivered(selection.size(), 0);
  for (std::size_t i = 0; i < selection.size(); ++i) {
    if (!selection[i]) continue;
    delivered[i] = rng.bernoulli(1.0 - per[i]) ? 1 : 0;
  }
  return delivered;
}

ModelVector aggregate(std::span<const ModelVector> locals,
                      std::span<const std::uint8_t> delivered,
                      std::span<const int> sample_counts,
                      const ModelVector& previous_global) {
  ModelVector sum(previous_global.dim());
  double weight = 0.0;
  for (std::size_t i = 0; i < locals.size(); ++i) {
    if (!delivered[i]) continue;
    const double k = sample_counts[i];
    for (std::size_t j = 0; j < sum.dim(); ++j) sum[j] += k * locals[i][j];
    weight += k;
  }
  if (weight == 0.0) return previous_global;
  for (std::size_t j = 0; j < sum.dim(); ++j) sum[j] /= weight;
  return sum;
}

ModelVector least_squares_optimum(const Dataset& dataset) {
  const std::size_t d = dataset.dim;
  // Augmented normal equations [X^T X | X^T y].
  std::vector<double> a(d * (d + 1), 0.0);
  for (const auto& u : dataset.users) {
    for (std::size_t k = 0; k < u.sample_count(); ++k) {
      const auto x = u.row(k);
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) a[r * (d + 1) + c] += x[r] * x[c];
        a[r * (d + 1) + d] += x[r] * u.targets[k];
      }
    }
  }
  double scale = 0.0;
  for (std::size_t r = 0; r < d; ++r) scale = std::max(scale, std::abs(a[r * (d + 1) + r]));
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::abs(a[r * (d + 1) + col]) > std::abs(a[pivot * (d + 1) + col])) pivot = r;
    }
    if (!(std::abs(a[pivot * (d + 1) + col]) > 1e-12 * scale)) {
      throw std::domain_error("least_squares_optimum: design matrix is rank deficient");
    }
    if (pivot != col) {
      for (std::size_t c = 0; c <= d; ++c) std::swap(a[pivot * (d + 1) + c], a[col * (d + 1) + c]);
    }
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r * (d + 1) + col] / a[col * (d + 1) + col];
      for (std::size_t c = col; c <= d; ++c) a[r * (d + 1) + c] -= f * a[col * (d + 1) + c];
    }
  }
  ModelVector g(d);
  for (std::size_t r = 0; r < d; ++r) g[r] = a[r * (d + 1) + d] / a[r * (d + 1) + r];
  return g;
}

std::vector<double> TrainingTrace::losses() const {
  std::vector<double> out;
  out.reserve(rounds.size() + 1);
  out.push_back(initial_loss);
  for (const auto& r : rounds) out.push_back(r.loss);
  return out;
}

std::vector<ModelVector> TrainingTrace::models() const {
  std::vector<ModelVector> out;
  out.reserve(rounds.size() + 1);
  out.push_back(initial);
  for (const auto& r : rounds) out.push_back(r.global);
  return out;
}

TrainingTrace run_training(const Dataset& dataset,
                           const opt::AllocationDecision& decision,
                           const TrainingOptions& options, Rng& rng) {
  if (options.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (decision.user_count() != dataset.users.size()) {
    throw std::invalid_argument("allocation and dataset disagree on user count");
  }
  const auto selection = decision.selection();
  std::vector<int> counts(dataset.users.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] = static_cast<int>(dataset.users[i].sample_count());
  }

  TrainingTrace trace;
  trace.initial = options.initial.dim() == 0 ? ModelVector(dataset.dim) : options.initial;
  trace.initial_loss = global_loss(trace.initial, dataset);
  trace.rounds.reserve(static_cast<std::size_t>(options.rounds));

  ModelVector global = trace.initial;
  std::vector<ModelVector> locals(dataset.users.size(), ModelVector(dataset.dim));
  for (int t = 1; t <= options.rounds; ++t) {
    for (std::size_t i = 0; i < dataset.users.size(); ++i) {
      locals[i] = selection[i]
                      ? local_update(global, dataset.users[i], options.learning_rate)
                      : global;
    }
    auto delivered = transmit(selection, decision.per, rng);
    global = aggregate(locals, delivered, counts, global);
    const double loss = global_loss(global, dataset);
    if (!std::isfinite(loss) || !global.all_finite()) {
      std::ostringstream os;
      os << "training diverged at round " << t << " (learning rate "
         << options.learning_rate << ")";
      throw DivergenceError(os.str());
    }
    trace.rounds.push_back({t, std::move(delivered), global, loss});
  }
  return trace;
}

}  // namespace flwire::fl
