#pragma once

#include <cstdint>
#include <vector>

namespace flwire::phy {

// Converts a power spectral density in dBm/Hz to W/Hz.
double dbm_per_hz_to_watts(double dbm_per_hz);

// Cell-wide link budget. All quantities are linear SI units.
struct NetworkParams {
  int rb_count = 12;
  double rb_bandwidth_hz = 1e6;          // B^U
  double downlink_bandwidth_hz = 20e6;   // B^D
  double noise_density_w_per_hz = 0.0;   // N0; set from -174 dBm/Hz by default
  double bs_power_w = 1.0;               // P_B
  double max_user_power_w = 0.01;        // P_max
  double waterfall_threshold = 0.023;    // m, linear
  std::vector<double> uplink_interference_w;  // I_n, one entry per RB
  double downlink_interference_w = 0.0;  // I^D
  double delay_budget_s = 0.5;           // gamma_T
  double energy_budget_j = 0.003;        // gamma_E
  double pathloss_exponent = 2.0;        // alpha

  bool operator==(const NetworkParams&) const = default;
};

// Reference cell values with interference-free RBs.
NetworkParams default_network(int rb_count = 12);

// Throws std::invalid_argument naming the first violated field.
void validate(const NetworkParams& params);

struct UserProfile {
  double distance_m = 100.0;
  double fading_scale = 1.0;        // mean of the exponential fading power
  int sample_count = 1;             // K_i
  double cpu_cycles_per_bit = 40.0; // omega_i
  double cpu_freq_hz = 1e9;         // vartheta
  double energy_coeff = 1e-27;      // varsigma
  double payload_bits = 5e4;        // Z

  bool operator==(const UserProfile&) const = default;
};

void validate(const UserProfile& user);

// How E_h[.] over Rayleigh fading is evaluated.
struct FadingExpectation {
  enum class Method { quadrature, monte_carlo, point_mass };

  Method method = Method::quadrature;
  int node_or_sample_count = 64;
  std::uint64_t seed = 0;  // monte_carlo only

  static FadingExpectation quadrature(int nodes = 64) {
    return {Method::quadrature, nodes, 0};
  }
  static FadingExpectation monte_carlo(int samples, std::uint64_t seed) {
    return {Method::monte_carlo, samples, seed};
  }
  // Fading fixed at its mean; expectations collapse to the integrand.
  static FadingExpectation point_mass() { return {Method::point_mass, 16, 0}; }

  bool operator==(const FadingExpectation&) const = default;
};

void validate(const FadingExpectation& fexp);

// One cell: link budget, the users it serves, and how fading is averaged.
struct Topology {
  NetworkParams params;
  std::vector<UserProfile> users;
  FadingExpectation fexp;

  std::size_t user_count() const noexcept { return users.size(); }
  int total_samples() const noexcept {
    int k = 0;
    for (const auto& u : users) k += u.sample_count;
    return k;
  }
};

}  // namespace flwire::phy
