#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace homsim {

/// Angular spectral bandwidth in rad/s.
struct AngularBandwidth {
  double rad_per_s = 0.0;

  AngularBandwidth() = default;
  explicit AngularBandwidth(double w) : rad_per_s(w) {
    if (!(w > 0.0)) throw std::domain_error("AngularBandwidth must be > 0");
  }
};

inline AngularBandwidth bandwidth_from_ghz(double ghz) {
  return AngularBandwidth(2.0 * std::numbers::pi * ghz * 1e9);
}

/// Parameters of the coincidence-dip model
///   C(t) = c_max * (1 - visibility * exp(-((t - center)/tau)^2))
struct DipModelParams {
  double c_max = 0.0;       // expected counts on the plateau
  double visibility = 0.0;  // in [0, 1]
  double tau = 0.0;         // 1/e half-width, s
  double center = 0.0;      // dip center, s

  void validate() const {
    if (!(c_max >= 0.0)) throw std::domain_error("c_max must be >= 0");
    if (!(visibility >= 0.0 && visibility <= 1.0))
      throw std::domain_error("visibility must be in [0, 1]");
    if (!(tau > 0.0)) throw std::domain_error("tau must be > 0");
  }
};

inline double dip_model_counts(double t, const DipModelParams& p) {
  const double z = (t - p.center) / p.tau;
  return p.c_max * (1.0 - p.visibility * std::exp(-z * z));
}

/// Parameters of the visibility-vs-n_bar model: heralding efficiency mu,
/// spurious-threefold probability n_sys, and the two spectral bandwidths.
struct VisibilityModelParams {
  double mu = 0.0;     // probability per pulse, in (0, 1]
  double n_sys = 0.0;  // probability per pulse, >= 0
  AngularBandwidth bw_a;
  AngularBandwidth bw_b;

  void validate() const {
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::domain_error("mu must be in [0, 1]");
    if (!(n_sys >= 0.0)) throw std::domain_error("n_sys must be >= 0");
    if (!(bw_a.rad_per_s > 0.0 && bw_b.rad_per_s > 0.0))
      throw std::domain_error("bandwidths must be > 0");
  }
};

/// Transform-limited Gaussian time-bandwidth conversion:
/// FWHM duration -> angular spectral FWHM, using dt * df = 0.441.
inline AngularBandwidth pulse_to_angular_bandwidth(double fwhm_duration_s) {
  if (!(fwhm_duration_s > 0.0))
    throw std::domain_error("pulse duration must be > 0");
  return AngularBandwidth(2.0 * std::numbers::pi * 0.441 / fwhm_duration_s);
}

/// The narrower of pulse spectrum and filter passband dominates.
inline AngularBandwidth effective_bandwidth(AngularBandwidth pulse_bw,
                                            AngularBandwidth filter_bw) {
  if (!(pulse_bw.rad_per_s > 0.0 && filter_bw.rad_per_s > 0.0))
    throw std::domain_error("bandwidths must be > 0");
  return pulse_bw.rad_per_s <= filter_bw.rad_per_s ? pulse_bw : filter_bw;
}

/// Gaussian decay rate of the dip, a^2 b^2 / (a^2 + b^2), in s^-2.
inline double spectral_decay_rate(AngularBandwidth bw_a, AngularBandwidth bw_b) {
  const double a2 = bw_a.rad_per_s * bw_a.rad_per_s;
  const double b2 = bw_b.rad_per_s * bw_b.rad_per_s;
  return a2 * b2 / (a2 + b2);
}

/// Spectral-overlap factor
///   4 a b / (a^2 + b^2) * exp(-a^2 b^2 t^2 / (a^2 + b^2)),
/// in (0, 2]; equals 2 iff a == b and t == 0.
inline double spectral_factor(AngularBandwidth bw_a, AngularBandwidth bw_b,
                              double delay_s) {
  const double a = bw_a.rad_per_s;
  const double b = bw_b.rad_per_s;
  if (!(a > 0.0 && b > 0.0)) throw std::domain_error("bandwidths must be > 0");
  const double peak = 4.0 * a * b / (a * a + b * b);
  return peak * std::exp(-spectral_decay_rate(bw_a, bw_b) * delay_s * delay_s);
}

/// Visibility of the WCS-vs-heralded-photon dip as a function of the WCS
/// mean photon number:
///   V = spectral_factor / (n_bar/mu + 2 + n_sys/(n_bar mu))
inline double predict_visibility(double n_bar, const VisibilityModelParams& p,
                                 double delay_s = 0.0) {
  p.validate();
  if (!(n_bar > 0.0)) throw std::domain_error("n_bar must be > 0");
  if (!(p.mu > 0.0)) throw std::domain_error("mu must be > 0");
  const double denom = n_bar / p.mu + 2.0 + p.n_sys / (n_bar * p.mu);
  return spectral_factor(p.bw_a, p.bw_b, delay_s) / denom;
}

/// n_bar maximizing predict_visibility: argmin of n/mu + n_sys/(n mu),
/// which is sqrt(n_sys) (mu cancels).
inline double optimal_n_bar(const VisibilityModelParams& p) {
  p.validate();
  if (!(p.n_sys > 0.0))
    throw std::domain_error("optimal_n_bar requires n_sys > 0");
  return std::sqrt(p.n_sys);
}

}  // namespace homsim
