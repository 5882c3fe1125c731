#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace homsim {

struct FiberLink {
  double length_m = 0.0;
  double loss_db = 0.0;      // total, includes junctions
  double prop_delay_s = 0.0;
  double raman_coeff = 0.0;  // noise photons / (s * mW of launch power)

  void validate() const {
    if (!(length_m >= 0.0)) throw std::domain_error("length must be >= 0");
    if (!(loss_db >= 0.0)) throw std::domain_error("loss_db must be >= 0");
    if (!(raman_coeff >= 0.0)) throw std::domain_error("raman_coeff must be >= 0");
  }
};

enum class Propagation { Counter, Co };

struct ClassicalChannel {
  double launch_power_dbm = 0.0;
  Propagation direction = Propagation::Counter;
  double co_prop_multiplier = 1.0;  // scaling applied when co-propagating
};

inline double apply_loss_dbm(double power_dbm, double loss_db) {
  if (!(loss_db >= 0.0)) throw std::domain_error("loss_db must be >= 0");
  return power_dbm - loss_db;
}

inline double transmittance(double loss_db) {
  if (!(loss_db >= 0.0)) throw std::domain_error("loss_db must be >= 0");
  return std::pow(10.0, -loss_db / 10.0);
}

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

/// Spontaneous-Raman surrogate: probability of a noise photon reaching the
/// coupler within one detection window. Linear in launch power (mW).
inline double raman_noise_prob_per_pulse(const ClassicalChannel& channel,
                                         const FiberLink& link,
                                         double /*rep_rate_hz*/,
                                         double detection_window_s) {
  link.validate();
  if (!(detection_window_s >= 0.0))
    throw std::domain_error("detection window must be >= 0");
  double mult = channel.direction == Propagation::Co ? channel.co_prop_multiplier : 1.0;
  double p = link.raman_coeff * dbm_to_mw(channel.launch_power_dbm) *
             detection_window_s * mult;
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

}  // namespace homsim
