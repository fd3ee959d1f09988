#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flwire/fl/training.hpp"
#include "flwire/phy/params.hpp"

namespace flwire::harness {

enum class Algorithm { proposed, baseline_a, baseline_b, baseline_c };

inline constexpr std::array<Algorithm, 4> kAllAlgorithms = {
    Algorithm::proposed, Algorithm::baseline_a, Algorithm::baseline_b,
    Algorithm::baseline_c};

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-user parameters shared by every generated user; distances are drawn
// uniformly over the disc unless listed explicitly.
struct UserSpec {
  int count = 15;
  double radius_m = 500.0;
  std::vector<int> sample_counts = {12, 10, 8, 4, 2};  // cycled over users
  std::vector<double> distances_m;                      // optional, size == count
  double fading_scale = 1.0;
  double cpu_cycles_per_bit = 40.0;
  double cpu_freq_hz = 1e9;
  double energy_coeff = 1e-27;
  double payload_bits = 5e4;

  bool operator==(const UserSpec&) const = default;
};

struct TrainingSpec {
  std::optional<double> fixed_learning_rate;  // nullopt: 1/L
  int rounds = 200;
  std::vector<double> initial_model;  // empty: zeros

  bool operator==(const TrainingSpec&) const = default;
};

struct BoundSpec {
  bool enabled = false;
  int runs = 100;

  bool operator==(const BoundSpec&) const = default;
};

struct ExperimentConfig {
  // uplink_interference_w empty: log-spaced over interference_range_w.
  phy::NetworkParams network;
  std::array<double, 2> interference_range_w = {1e-8, 1e-7};
  UserSpec users;
  fl::RegressionTask task;
  TrainingSpec training;
  std::vector<Algorithm> algorithms = {kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::vector<std::uint64_t> seeds = {7};
  phy::FadingExpectation fading;
  BoundSpec bound;
  std::string output_dir = "results";
  int threads = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig default_config();

// JSON document; absent keys keep their defaults, unknown keys are errors.
// Throws ConfigError naming the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

// Network parameters with the per-RB interference filled in.
phy::NetworkParams resolved_network(const ExperimentConfig& config);

}  // namespace flwire::harness
