#pragma once

#include "flwire/phy/params.hpp"

namespace flwire::phy {

// h = o * d^{-alpha}. Throws std::domain_error for non-positive distance or
// fading draw.
double channel_gain(const UserProfile& user, double fading_draw,
                    const NetworkParams& params);

// Expected uplink rate (bits/s) of `user` on RB `rb_index` at `power_w`.
double expected_uplink_rate(const UserProfile& user, int rb_index,
                            double power_w, const NetworkParams& params,
                            const FadingExpectation& fexp);

// Expected broadcast rate (bits/s) of the global model to `user`.
double expected_downlink_rate(const UserProfile& user,
                              const NetworkParams& params,
                              const FadingExpectation& fexp);

// Z / rate; +infinity when the rate is zero.
double uplink_delay(const UserProfile& user, int rb_index, double power_w,
                    const NetworkParams& params,
                    const FadingExpectation& fexp);
double downlink_delay(const UserProfile& user, const NetworkParams& params,
                      const FadingExpectation& fexp);

// Waterfall packet error rate q_{i,n} in [0, 1]. Exactly 1 at zero power.
double packet_error_rate(const UserProfile& user, int rb_index,
                         double power_w, const NetworkParams& params,
                         const FadingExpectation& fexp);

// Training energy varsigma * omega * vartheta^2 * Z (joules).
double training_energy(const UserProfile& user);

// Training plus transmission energy. Zero payload costs nothing; zero power
// with a non-empty payload can never finish the upload and returns +infinity.
double user_energy(const UserProfile& user, int rb_index, double power_w,
                   const NetworkParams& params, const FadingExpectation& fexp);

}  // namespace flwire::phy
