#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "homsim/core.hpp"
#include "homsim/rng.hpp"

namespace homsim {

/// Master clock as seen by the remote node after transceiver-based recovery.
struct ClockModel {
  double rep_rate_hz = 0.0;
  double recovered_jitter_rms_s = 0.0;
  double static_offset_s = 0.0;

  void validate() const {
    if (!(rep_rate_hz > 0.0)) throw std::domain_error("rep_rate must be > 0");
    if (!(recovered_jitter_rms_s >= 0.0))
      throw std::domain_error("jitter must be >= 0");
  }
};

/// Recovered edge time for one pulse; jitter samples are independent per pulse.
inline double recovered_pulse_time(const ClockModel& clock,
                                   std::int64_t pulse_index, RngStream& rng) {
  clock.validate();
  return static_cast<double>(pulse_index) / clock.rep_rate_hz +
         clock.static_offset_s +
         rng.normal(0.0, clock.recovered_jitter_rms_s);
}

/// Gaussian-Gaussian convolution of the dip with white clock jitter:
///   tau' = sqrt(tau^2 + 2 sigma_j^2),  V' = V * tau / tau'.
/// c_max and center are unchanged.
inline DipModelParams jitter_corrected_dip(const DipModelParams& params,
                                           double jitter_rms_s) {
  params.validate();
  if (!(jitter_rms_s >= 0.0)) throw std::domain_error("jitter must be >= 0");
  DipModelParams out = params;
  out.tau = std::sqrt(params.tau * params.tau + 2.0 * jitter_rms_s * jitter_rms_s);
  out.visibility = params.visibility * params.tau / out.tau;
  return out;
}

}  // namespace homsim
