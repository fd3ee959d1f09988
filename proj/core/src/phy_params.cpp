#include <cmath>
#include <stdexcept>
#include <string>

#include "flwire/phy/params.hpp"

namespace flwire::phy {
namespace {

void require(bool ok, const char* field, const char* constraint) {
  if (!ok) {
    throw std::invalid_argument(std::string(field) + ": must be " + constraint);
  }
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

double dbm_per_hz_to_watts(double dbm_per_hz) {
  return std::pow(10.0, (dbm_per_hz - 30.0) / 10.0);
}

NetworkParams default_network(int rb_count) {
  NetworkParams p;
  p.rb_count = rb_count;
  p.noise_density_w_per_hz = dbm_per_hz_to_watts(-174.0);
  p.uplink_interference_w.assign(static_cast<std::size_t>(rb_count), 0.0);
  return p;
}

void validate(const NetworkParams& p) {
  require(p.rb_count >= 1, "rb_count", ">= 1");
  require(positive(p.rb_bandwidth_hz), "rb_bandwidth_hz", "> 0");
  require(positive(p.downlink_bandwidth_hz), "downlink_bandwidth_hz", "> 0");
  require(positive(p.noise_density_w_per_hz), "noise_density_w_per_hz", "> 0");
  require(positive(p.bs_power_w), "bs_power_w", "> 0");
  require(positive(p.max_user_power_w), "max_user_power_w", "> 0");
  require(positive(p.waterfall_threshold), "waterfall_threshold", "> 0");
  require(p.uplink_interference_w.size() ==
              static_cast<std::size_t>(p.rb_count),
          "uplink_interference_w", "one entry per RB");
  for (double v : p.uplink_interference_w) {
    require(std::isfinite(v) && v >= 0.0, "uplink_interference_w", ">= 0");
  }
  require(std::isfinite(p.downlink_interference_w) &&
              p.downlink_interference_w >= 0.0,
          "downlink_interference_w", ">= 0");
  require(positive(p.delay_budget_s), "delay_budget_s", "> 0");
  require(positive(p.energy_budget_j), "energy_budget_j", "> 0");
  require(positive(p.pathloss_exponent), "pathloss_exponent", "> 0");
}

void validate(const UserProfile& u) {
  require(positive(u.distance_m), "distance_m", "> 0");
  require(positive(u.fading_scale), "fading_scale", "> 0");
  require(u.sample_count >= 1, "sample_count", ">= 1");
  require(positive(u.cpu_cycles_per_bit), "cpu_cycles_per_bit", "> 0");
  require(positive(u.cpu_freq_hz), "cpu_freq_hz", "> 0");
  require(positive(u.energy_coeff), "energy_coeff", "> 0");
  require(positive(u.payload_bits), "payload_bits", "> 0");
}

void validate(const FadingExpectation& f) {
  require(f.node_or_sample_count >= 16, "node_or_sample_count", ">= 16");
}

}  // namespace flwire::phy
