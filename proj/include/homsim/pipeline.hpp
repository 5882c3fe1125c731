#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <thread>
#include <vector>

#include "homsim/acquisition.hpp"
#include "homsim/analysis.hpp"
#include "homsim/fock.hpp"
#include "homsim/link.hpp"
#include "homsim/scenario.hpp"

namespace homsim {

/// Sample the output-port photon numbers of the 50:50 coupler for kA WCS
/// photons against nB heralded-source photons with mode overlap o.
/// The frequent low-photon-number cases are closed form; anything rarer
/// falls back to the exact Fock distribution.
inline std::pair<int, int> sample_beamsplitter(int k_a, int n_b, double overlap,
                                               RngStream& rng) {
  const int total = k_a + n_b;
  if (total == 0) return {0, 0};
  if (total == 1) return rng.bernoulli(0.5) ? std::pair{1, 0} : std::pair{0, 1};
  if (k_a == 1 && n_b == 1) {
    const double p_split = (1.0 - overlap * overlap) / 2.0;
    const double u = rng.uniform();
    if (u < p_split) return {1, 1};
    return u < p_split + (1.0 - p_split) / 2.0 ? std::pair{2, 0} : std::pair{0, 2};
  }
  if (k_a == 0 || n_b == 0) {
    // photons from a single port: overlap-independent binomial-squared split
    const auto amps = beamsplitter_fock_amplitudes(k_a, n_b);
    double u = rng.uniform();
    for (int j = 0; j < static_cast<int>(amps.size()); ++j) {
      const double p = amps[static_cast<std::size_t>(j)] *
                       amps[static_cast<std::size_t>(j)];
      if (u < p) return {j, total - j};
      u -= p;
    }
    return {total, 0};
  }
  const auto dist = beamsplitter_output_distribution(k_a, n_b, overlap);
  double u = rng.uniform();
  for (const auto& [ports, p] : dist) {
    if (u < p) return ports;
    u -= p;
  }
  return dist.rbegin()->first;
}

namespace detail {

inline int sample_discrete(const std::vector<double>& cdf, RngStream& rng) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(it - cdf.begin());
}

}  // namespace detail

/// Per-scenario quantities the pulse loop reuses.
class ScanContext {
 public:
  explicit ScanContext(const Scenario& s) : scenario_(s) {
    s.validate();
    const auto bw_a = s.bandwidth_a();
    const auto bw_b = s.bandwidth_b();
    decay_rate_ = spectral_decay_rate(bw_a, bw_b);
    peak_overlap_sq_ = spectral_factor(bw_a, bw_b, 0.0) / 2.0;

    herald_eff_ = s.eps.herald_efficiency * s.det_herald.efficiency;
    accidental_ = 1.0 - (1.0 - s.eps.accidental_herald_prob()) *
                            (1.0 - s.det_herald.dark_prob_per_bin);

    // pair-count distribution conditioned on a herald
    const double p = s.eps.pair_prob;
    double poisson = std::exp(-p);
    double total = 0.0;
    std::vector<double> cond;
    for (int n = 0; n < 64; ++n) {
      const double fire =
          1.0 - (1.0 - accidental_) * std::pow(1.0 - herald_eff_, n);
      cond.push_back(poisson * fire);
      total += cond.back();
      if (poisson < 1e-15 && n > 2) break;
      poisson *= p / (n + 1);
    }
    herald_prob_ = total;
    double acc = 0.0;
    for (double v : cond) {
      acc += v / total;
      pair_cdf_.push_back(acc);
    }

    const double raman = raman_noise_prob_per_pulse(
        s.channel, s.link, s.clock.rep_rate_hz, s.bin_width_s());
    noise1_ = 1.0 - (1.0 - s.det_snspd1.dark_prob_per_bin) *
                        (1.0 - s.det_snspd1.efficiency * raman / 2.0);
    noise2_ = 1.0 - (1.0 - s.det_snspd2.dark_prob_per_bin) *
                        (1.0 - s.det_snspd2.efficiency * raman / 2.0);
  }

  const Scenario& scenario() const { return scenario_; }
  double herald_prob() const { return herald_prob_; }
  double snspd_noise_1() const { return noise1_; }
  double snspd_noise_2() const { return noise2_; }

  int sample_pairs_given_herald(RngStream& rng) const {
    return detail::sample_discrete(pair_cdf_, rng);
  }

  /// Mode-overlap amplitude squared at the given relative arrival delay.
  double overlap_sq(double relative_delay_s) const {
    return peak_overlap_sq_ *
           std::exp(-decay_rate_ * relative_delay_s * relative_delay_s);
  }

  /// Relative WCS-vs-HSP arrival delay for one pulse, jitter included.
  double relative_delay(double pump_delay_s, RngStream& rng) const {
    const double jitter =
        rng.normal(0.0, scenario_.clock.recovered_jitter_rms_s);
    return scenario_.wcs.center_offset_s + jitter - pump_delay_s;
  }

  /// One heralded pulse through coupler and detectors; returns whether both
  /// SNSPDs click (a threefold, given the herald).
  bool heralded_pulse_threefold(double pump_delay_s, RngStream& rng) const {
    const Scenario& s = scenario_;
    const int pairs = sample_pairs_given_herald(rng);
    const int n_sig = rng.binomial(pairs, s.eps.signal_efficiency);
    const int k_wcs = rng.poisson(s.wcs.n_bar);

    int nc = 0, nd = 0;
    if (n_sig + k_wcs > 0) {
      const double osq = overlap_sq(relative_delay(pump_delay_s, rng));
      std::tie(nc, nd) = sample_beamsplitter(k_wcs, n_sig, std::sqrt(osq), rng);
    }
    const double p1 = 1.0 - std::pow(1.0 - s.det_snspd1.efficiency, nc);
    const double p2 = 1.0 - std::pow(1.0 - s.det_snspd2.efficiency, nd);
    const bool click1 = rng.bernoulli(p1) || rng.bernoulli(noise1_);
    const bool click2 = rng.bernoulli(p2) || rng.bernoulli(noise2_);
    return click1 && click2;
  }

 private:
  Scenario scenario_;
  double decay_rate_ = 0.0;
  double peak_overlap_sq_ = 0.0;
  double herald_eff_ = 0.0;
  double accidental_ = 0.0;
  double herald_prob_ = 0.0;
  std::vector<double> pair_cdf_;
  double noise1_ = 0.0;
  double noise2_ = 0.0;
};

/// Threefold count for one delay point. Only heralded pulses are simulated
/// (a threefold requires a herald by definition), which makes 60 s of wall
/// time at 100 MHz tractable; the heralded-pulse count itself is drawn from
/// the pulse-train statistics, so counts remain Poissonian.
inline std::int64_t simulate_threefolds(const ScanContext& ctx,
                                        double pump_delay_s, double duration_s,
                                        RngStream& rng) {
  const double n_pulses = duration_s * ctx.scenario().clock.rep_rate_hz;
  std::poisson_distribution<std::int64_t> herald_count(n_pulses *
                                                       ctx.herald_prob());
  const std::int64_t heralds = herald_count(rng.engine());
  std::int64_t threefolds = 0;
  for (std::int64_t i = 0; i < heralds; ++i)
    if (ctx.heralded_pulse_threefold(pump_delay_s, rng)) ++threefolds;
  return threefolds;
}

/// Full scan over the configured pump-delay range. Delay points run on
/// independent RNG substreams, so the result is byte-identical for any
/// thread count.
inline Interferogram build_interferogram(const Scenario& scenario,
                                         int threads = 1) {
  const ScanContext ctx(scenario);
  const int half = scenario.scan.half_range_steps;
  const int n_points = 2 * half + 1;

  std::vector<double> delays(static_cast<std::size_t>(n_points));
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i)
    delays[static_cast<std::size_t>(i)] = (i - half) * scenario.eps.delay_step_s;

  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      RngStream rng(scenario.seed, static_cast<std::uint64_t>(i));
      counts[static_cast<std::size_t>(i)] = simulate_threefolds(
          ctx, delays[static_cast<std::size_t>(i)],
          scenario.scan.integration_time_s, rng);
    }
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    work(0, n_points);
  } else {
    std::vector<std::future<void>> futures;
    const int chunk = (n_points + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n_points, begin + chunk);
      if (begin >= end) break;
      futures.push_back(std::async(std::launch::async, work, begin, end));
    }
    for (auto& f : futures) f.get();
  }

  Interferogram gram;
  gram.integration_time_s = scenario.scan.integration_time_s;
  gram.meta = scenario_digest(scenario);
  for (int i = 0; i < n_points; ++i) {
    InterferogramPoint p;
    p.delay_s = delays[static_cast<std::size_t>(i)];
    p.counts = static_cast<double>(counts[static_cast<std::size_t>(i)]);
    p.sigma = poisson_sigma(p.counts);
    gram.points.push_back(p);
  }
  return gram;
}

struct StreamSet {
  TimetagStream herald;
  TimetagStream snspd1;
  TimetagStream snspd2;
};

/// Event-level simulation producing the three raw timetag streams for one
/// pump-delay setting. Sparse processes are skip-sampled over the pulse
/// train; intended for export and cross-checks at moderate durations.
inline StreamSet simulate_streams(const Scenario& scenario, double pump_delay_s,
                                  double duration_s, std::uint64_t stream_id = 0) {
  const ScanContext ctx(scenario);
  const Scenario& s = scenario;
  RngStream rng(s.seed, 0x5741'0000ULL ^ stream_id);

  const double bw = s.bin_width_s();
  const std::int64_t total_bins =
      static_cast<std::int64_t>(std::ceil(duration_s / bw));
  const std::int64_t n_pulses =
      static_cast<std::int64_t>(duration_s * s.clock.rep_rate_hz);
  const double pulse_period = 1.0 / s.clock.rep_rate_hz;
  // nominal detection point sits clear of the bin edges, so ps-scale pump
  // delays and jitter cannot move a tag across a bin boundary
  const double anchor = 0.4 * bw;

  auto pulse_bin = [&](std::int64_t pulse) {
    return static_cast<std::int64_t>(
        (static_cast<double>(pulse) * pulse_period + anchor) / bw);
  };

  std::vector<std::int64_t> herald_tags, d1_tags, d2_tags;

  // pulses with at least one pair and pulses with at least one WCS photon
  const double q_pair = 1.0 - std::exp(-s.eps.pair_prob);
  const double q_wcs = 1.0 - std::exp(-s.wcs.n_bar);

  auto next_active = [&](double q, std::int64_t from) -> std::int64_t {
    if (q <= 0.0) return n_pulses;
    return from + 1 + static_cast<std::int64_t>(rng.geometric_skip(q));
  };
  auto truncated_poisson_ge1 = [&](double mean) {
    // inversion on P(n | n >= 1)
    double u = rng.uniform() * (1.0 - std::exp(-mean));
    double term = std::exp(-mean);
    for (int n = 1; n < 64; ++n) {
      term *= mean / n;
      if (u < term) return n;
      u -= term;
    }
    return 64;
  };

  std::int64_t pair_pulse = next_active(q_pair, -1);
  std::int64_t wcs_pulse = next_active(q_wcs, -1);
  const double herald_eff = s.eps.herald_efficiency * s.det_herald.efficiency;

  while (pair_pulse < n_pulses || wcs_pulse < n_pulses) {
    const std::int64_t pulse = std::min(pair_pulse, wcs_pulse);
    int pairs = 0, k_wcs = 0;
    if (pulse == pair_pulse) {
      pairs = truncated_poisson_ge1(s.eps.pair_prob);
      pair_pulse = next_active(q_pair, pair_pulse);
    }
    if (pulse == wcs_pulse) {
      k_wcs = truncated_poisson_ge1(s.wcs.n_bar);
      wcs_pulse = next_active(q_wcs, wcs_pulse);
    }

    if (pairs > 0 &&
        rng.bernoulli(1.0 - std::pow(1.0 - herald_eff, pairs)))
      herald_tags.push_back(pulse_bin(pulse));

    const int n_sig = rng.binomial(pairs, s.eps.signal_efficiency);
    if (n_sig + k_wcs > 0) {
      const double osq = ctx.overlap_sq(ctx.relative_delay(pump_delay_s, rng));
      const auto [nc, nd] = sample_beamsplitter(k_wcs, n_sig, std::sqrt(osq), rng);
      if (rng.bernoulli(1.0 - std::pow(1.0 - s.det_snspd1.efficiency, nc)))
        d1_tags.push_back(pulse_bin(pulse));
      if (rng.bernoulli(1.0 - std::pow(1.0 - s.det_snspd2.efficiency, nd)))
        d2_tags.push_back(pulse_bin(pulse));
    }
  }

  // accidental heralds and per-pulse Raman clicks
  auto sprinkle_pulses = [&](double prob, std::vector<std::int64_t>& tags) {
    if (prob <= 0.0) return;
    std::int64_t pulse = -1;
    for (;;) {
      pulse += 1 + static_cast<std::int64_t>(rng.geometric_skip(prob));
      if (pulse >= n_pulses) break;
      tags.push_back(pulse_bin(pulse));
    }
  };
  sprinkle_pulses(s.eps.accidental_herald_prob(), herald_tags);
  const double raman = raman_noise_prob_per_pulse(s.channel, s.link,
                                                  s.clock.rep_rate_hz, bw);
  sprinkle_pulses(s.det_snspd1.efficiency * raman / 2.0, d1_tags);
  sprinkle_pulses(s.det_snspd2.efficiency * raman / 2.0, d2_tags);

  // detector darks over all bins
  auto sprinkle_bins = [&](double prob, std::vector<std::int64_t>& tags) {
    if (prob <= 0.0) return;
    std::int64_t bin = -1;
    for (;;) {
      bin += 1 + static_cast<std::int64_t>(rng.geometric_skip(prob));
      if (bin >= total_bins) break;
      tags.push_back(bin);
    }
  };
  sprinkle_bins(s.det_herald.dark_prob_per_bin, herald_tags);
  sprinkle_bins(s.det_snspd1.dark_prob_per_bin, d1_tags);
  sprinkle_bins(s.det_snspd2.dark_prob_per_bin, d2_tags);

  auto finish = [&](std::vector<std::int64_t>& tags, DetectorLabel label) {
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    TimetagStream stream;
    stream.detector = label;
    stream.bins = std::move(tags);
    stream.bin_width_s = bw;
    stream.total_bins = total_bins;
    stream.validate();
    return stream;
  };
  StreamSet set;
  set.herald = finish(herald_tags, DetectorLabel::Herald);
  set.snspd1 = finish(d1_tags, DetectorLabel::Snspd1);
  set.snspd2 = finish(d2_tags, DetectorLabel::Snspd2);
  return set;
}

/// Pulse period expressed in correlator bins (for CAR offsets).
inline std::int64_t pulse_period_bins(const Scenario& s) {
  return static_cast<std::int64_t>(
      std::llround(s.sample_rate_hz / s.clock.rep_rate_hz));
}

}  // namespace homsim
