#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "homsim/rng.hpp"

namespace homsim {

/// Attenuated-laser (weak coherent state) pulse source.
struct WcsSourceConfig {
  double n_bar = 0.0;          // mean photons per pulse at the coupler input
  double pulse_fwhm_s = 0.0;   // optical pulse FWHM
  double rep_rate_hz = 0.0;
  double center_offset_s = 0.0;  // arrival offset relative to the HSP at zero pump delay

  void validate() const {
    if (!(n_bar >= 0.0)) throw std::domain_error("n_bar must be >= 0");
    if (!(pulse_fwhm_s > 0.0)) throw std::domain_error("pulse_fwhm must be > 0");
    if (!(rep_rate_hz > 0.0)) throw std::domain_error("rep_rate must be > 0");
  }
};

/// Heralded photon-pair source with electrically delayable pump.
struct EpsSourceConfig {
  double pair_prob = 0.0;          // mean pairs per pulse
  double car = 0.0;                // coincidences-to-accidentals ratio
  double pump_delay_s = 0.0;       // multiple of delay_step_s
  double delay_step_s = 10e-12;
  double herald_efficiency = 0.0;  // herald filter + SPAD chain, per pair
  double signal_efficiency = 0.0;  // signal photon reaches the coupler, per pair
  double pump_fwhm_s = 60e-12;

  void validate() const {
    if (!(pair_prob > 0.0 && pair_prob < 1.0))
      throw std::domain_error("pair_prob must be in (0, 1)");
    if (!(car >= 1.0)) throw std::domain_error("car must be >= 1");
    if (!(delay_step_s > 0.0)) throw std::domain_error("delay_step must be > 0");
    if (!(herald_efficiency >= 0.0 && herald_efficiency <= 1.0))
      throw std::domain_error("herald_efficiency must be in [0, 1]");
    if (!(signal_efficiency >= 0.0 && signal_efficiency <= 1.0))
      throw std::domain_error("signal_efficiency must be in [0, 1]");
    const double steps = pump_delay_s / delay_step_s;
    if (std::abs(steps - std::round(steps)) > 1e-6)
      throw std::domain_error("pump_delay must be a multiple of delay_step");
  }

  /// Equivalent dark-herald probability per pulse that makes the measured
  /// CAR reproduce the configured value when the configured CAR is below
  /// the multi-pair limit 1 + 1/pair_prob.
  double accidental_herald_prob() const {
    if (car <= 1.0) return 0.0;
    const double excess = herald_efficiency * (1.0 / (car - 1.0) - pair_prob);
    return excess > 0.0 ? excess : 0.0;
  }
};

/// Pair probability implied by a measured CAR under the adopted model
/// CAR = 1 + 1/pair_prob (true coincidences ~ p, accidentals ~ p^2).
inline double car_to_pair_prob(double car) {
  if (!(car > 1.0)) throw std::domain_error("car must be > 1");
  const double p = 1.0 / (car - 1.0);
  if (p >= 1.0) throw std::domain_error("car <= 2 implies pair_prob >= 1");
  return p;
}

inline EpsSourceConfig set_pump_delay(EpsSourceConfig config, int steps) {
  config.pump_delay_s = steps * config.delay_step_s;
  return config;
}

/// Per-pulse emission outcome for both sources.
struct EmissionRecord {
  std::int64_t pulse_index = 0;
  int photons_a = 0;           // WCS photons
  int pairs = 0;               // EPS pairs
  int accidental_heralds = 0;  // background herald events
  double emission_time_s = 0.0;
};

inline EmissionRecord sample_wcs(const WcsSourceConfig& config,
                                 std::int64_t pulse_index, RngStream& rng) {
  config.validate();
  EmissionRecord rec;
  rec.pulse_index = pulse_index;
  rec.photons_a = rng.poisson(config.n_bar);
  rec.emission_time_s =
      static_cast<double>(pulse_index) / config.rep_rate_hz + config.center_offset_s;
  return rec;
}

inline EmissionRecord sample_eps(const EpsSourceConfig& config,
                                 std::int64_t pulse_index, double rep_rate_hz,
                                 RngStream& rng) {
  config.validate();
  EmissionRecord rec;
  rec.pulse_index = pulse_index;
  rec.pairs = rng.poisson(config.pair_prob);
  rec.accidental_heralds = rng.bernoulli(config.accidental_herald_prob()) ? 1 : 0;
  rec.emission_time_s =
      static_cast<double>(pulse_index) / rep_rate_hz + config.pump_delay_s;
  return rec;
}

/// True-herald probability for a pulse with the given pair count.
inline bool herald_fires(const EpsSourceConfig& config, const EmissionRecord& rec,
                         RngStream& rng) {
  if (rec.accidental_heralds > 0) return true;
  if (rec.pairs == 0) return false;
  const double miss = std::pow(1.0 - config.herald_efficiency, rec.pairs);
  return rng.bernoulli(1.0 - miss);
}

}  // namespace homsim
