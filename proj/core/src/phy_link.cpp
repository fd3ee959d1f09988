#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "flwire/phy/fading.hpp"
#include "flwire/phy/link.hpp"

namespace flwire::phy {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pathloss(const UserProfile& user, const NetworkParams& params) {
  if (!(user.distance_m > 0.0)) {
    throw std::domain_error("distance_m must be > 0, got " +
                            std::to_string(user.distance_m));
  }
  return std::pow(user.distance_m, -params.pathloss_exponent);
}

double uplink_noise(int rb_index, const NetworkParams& params) {
  if (rb_index < 0 || rb_index >= params.rb_count ||
      static_cast<std::size_t>(rb_index) >=
          params.uplink_interference_w.size()) {
    throw std::out_of_range("rb_index " + std::to_string(rb_index) +
                            " outside [0, " +
                            std::to_string(params.rb_count) + ")");
  }
  return params.uplink_interference_w[static_cast<std::size_t>(rb_index)] +
         params.rb_bandwidth_hz * params.noise_density_w_per_hz;
}

void require_power(double power_w) {
  if (!(power_w >= 0.0)) {
    throw std::invalid_argument("power_w must be >= 0");
  }
}

// bandwidth * E[log2(1 + snr_per_unit_fading * o)]
double shannon_rate(double bandwidth, double snr_per_unit_fading,
                    double fading_mean, const FadingExpectation& fexp) {
  const double nats = expect_exponential(fexp, fading_mean, [&](double o) {
    return std::log1p(snr_per_unit_fading * o);
  });
  return bandwidth * nats / std::numbers::ln2;
}

}  // namespace

double channel_gain(const UserProfile& user, double fading_draw,
                    const NetworkParams& params) {
  if (!(fading_draw > 0.0)) {
    throw std::domain_error("fading_draw must be > 0");
  }
  return fading_draw * pathloss(user, params);
}

double expected_uplink_rate(const UserProfile& user, int rb_index,
                            double power_w, const NetworkParams& params,
                            const FadingExpectation& fexp) {
  require_power(power_w);
  const double noise = uplink_noise(rb_index, params);
  if (power_w == 0.0) return 0.0;
  const double snr = power_w * pathloss(user, params) / noise;
  return shannon_rate(params.rb_bandwidth_hz, snr, user.fading_scale, fexp);
}

double expected_downlink_rate(const UserProfile& user,
                              const NetworkParams& params,
                              const FadingExpectation& fexp) {
  if (params.bs_power_w == 0.0) return 0.0;
  const double noise = params.downlink_interference_w +
                       params.downlink_bandwidth_hz * params.noise_density_w_per_hz;
  const double snr = params.bs_power_w * pathloss(user, params) / noise;
  return shannon_rate(params.downlink_bandwidth_hz, snr, user.fading_scale,
                      fexp);
}

double uplink_delay(const UserProfile& user, int rb_index, double power_w,
                    const NetworkParams& params,
                    const FadingExpectation& fexp) {
  const double rate =
      expected_uplink_rate(user, rb_index, power_w, params, fexp);
  return rate > 0.0 ? user.payload_bits / rate : kInf;
}

double downlink_delay(const UserProfile& user, const NetworkParams& params,
                      const FadingExpectation& fexp) {
  const double rate = expected_downlink_rate(user, params, fexp);
  return rate > 0.0 ? user.payload_bits / rate : kInf;
}

double packet_error_rate(const UserProfile& user, int rb_index,
                         double power_w, const NetworkParams& params,
                         const FadingExpectation& fexp) {
  require_power(power_w);
  const double noise = uplink_noise(rb_index, params);
  if (power_w == 0.0) return 1.0;
  // Exponent scale for unit fading: m (I_n + B^U N0) / (P d^{-alpha}).
  const double scale =
      params.waterfall_threshold * noise / (power_w * pathloss(user, params));
  const double q = expect_exponential(fexp, user.fading_scale, [&](double o) {
    return -std::expm1(-scale / o);
  });
  return std::clamp(q, 0.0, 1.0);
}

double training_energy(const UserProfile& user) {
  return user.energy_coeff * user.cpu_cycles_per_bit * user.cpu_freq_hz *
         user.cpu_freq_hz * user.payload_bits;
}

double user_energy(const UserProfile& user, int rb_index, double power_w,
                   const NetworkParams& params,
                   const FadingExpectation& fexp) {
  require_power(power_w);
  if (user.payload_bits == 0.0) return 0.0;
  if (power_w == 0.0) return kInf;
  return training_energy(user) +
         power_w * uplink_delay(user, rb_index, power_w, params, fexp);
}

}  // namespace flwire::phy
