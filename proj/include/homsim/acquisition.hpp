#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "homsim/rng.hpp"

namespace homsim {

enum class DetectorLabel { Herald, Snspd1, Snspd2 };

inline std::string to_string(DetectorLabel label) {
  switch (label) {
    case DetectorLabel::Herald: return "herald";
    case DetectorLabel::Snspd1: return "snspd1";
    case DetectorLabel::Snspd2: return "snspd2";
  }
  throw std::logic_error("bad detector label");
}

inline DetectorLabel detector_label_from_string(const std::string& s) {
  if (s == "herald") return DetectorLabel::Herald;
  if (s == "snspd1") return DetectorLabel::Snspd1;
  if (s == "snspd2") return DetectorLabel::Snspd2;
  throw std::invalid_argument("unknown detector label: " + s);
}

/// Threshold (non-photon-number-resolving) detector.
struct DetectorConfig {
  double efficiency = 1.0;
  double dark_prob_per_bin = 0.0;
  DetectorLabel label = DetectorLabel::Herald;

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
      throw std::domain_error("efficiency must be in [0, 1]");
    if (!(dark_prob_per_bin >= 0.0 && dark_prob_per_bin < 1.0))
      throw std::domain_error("dark_prob_per_bin must be in [0, 1)");
  }
};

/// Sorted, de-duplicated detection bin indices at the correlator sampling rate.
struct TimetagStream {
  DetectorLabel detector = DetectorLabel::Herald;
  std::vector<std::int64_t> bins;
  double bin_width_s = 0.0;
  std::int64_t total_bins = 0;

  void validate() const {
    if (!(bin_width_s > 0.0)) throw std::domain_error("bin_width must be > 0");
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (bins[i] < 0 || bins[i] >= total_bins)
        throw std::domain_error("bin index out of range");
      if (i > 0 && bins[i] <= bins[i - 1])
        throw std::domain_error("bins must be strictly increasing");
    }
  }
};

struct CoincidenceResult {
  std::int64_t threefolds = 0;
  std::int64_t singles_herald = 0;
  std::int64_t singles_d1 = 0;
  std::int64_t singles_d2 = 0;
  std::int64_t pairs_h_d1 = 0;
  std::int64_t pairs_h_d2 = 0;
  std::int64_t pairs_d1_d2 = 0;
  double duration_s = 0.0;
};

/// Bin photon arrival times into a timetag stream. Each photon is detected
/// with the configured efficiency; every bin can additionally fire dark, and
/// multiple events in one bin collapse to a single tag.
inline TimetagStream detect(std::span<const double> arrival_times_s,
                            const DetectorConfig& config, double bin_width_s,
                            double duration_s, RngStream& rng) {
  config.validate();
  if (!(bin_width_s > 0.0)) throw std::domain_error("bin_width must be > 0");
  TimetagStream stream;
  stream.detector = config.label;
  stream.bin_width_s = bin_width_s;
  stream.total_bins = static_cast<std::int64_t>(std::ceil(duration_s / bin_width_s));

  for (double t : arrival_times_s) {
    if (t < 0.0 || t >= duration_s)
      throw std::domain_error("arrival time outside [0, duration)");
    if (rng.bernoulli(config.efficiency))
      stream.bins.push_back(static_cast<std::int64_t>(t / bin_width_s));
  }
  if (config.dark_prob_per_bin > 0.0) {
    std::int64_t bin = -1;
    for (;;) {
      bin += 1 + static_cast<std::int64_t>(rng.geometric_skip(config.dark_prob_per_bin));
      if (bin >= stream.total_bins) break;
      stream.bins.push_back(bin);
    }
  }
  std::sort(stream.bins.begin(), stream.bins.end());
  stream.bins.erase(std::unique(stream.bins.begin(), stream.bins.end()),
                    stream.bins.end());
  return stream;
}

namespace detail {

inline bool has_tag_near(const std::vector<std::int64_t>& bins, std::int64_t bin,
                         std::int64_t window) {
  auto it = std::lower_bound(bins.begin(), bins.end(), bin - window);
  return it != bins.end() && *it <= bin + window;
}

inline std::int64_t count_pairs(const std::vector<std::int64_t>& a,
                                const std::vector<std::int64_t>& b,
                                std::int64_t window, std::int64_t offset = 0) {
  std::int64_t n = 0;
  for (std::int64_t bin : a)
    if (has_tag_near(b, bin + offset, window)) ++n;
  return n;
}

}  // namespace detail

/// Threefold coincidences: bins where both SNSPD streams have a tag within
/// +-window_bins of a herald tag. window_bins = 0 means same-bin coincidence.
inline CoincidenceResult count_threefold(const TimetagStream& herald,
                                         const TimetagStream& d1,
                                         const TimetagStream& d2,
                                         std::int64_t window_bins = 0) {
  if (herald.bin_width_s != d1.bin_width_s || herald.bin_width_s != d2.bin_width_s)
    throw std::invalid_argument("mismatched bin widths");
  if (window_bins < 0) throw std::domain_error("window_bins must be >= 0");

  CoincidenceResult r;
  r.singles_herald = static_cast<std::int64_t>(herald.bins.size());
  r.singles_d1 = static_cast<std::int64_t>(d1.bins.size());
  r.singles_d2 = static_cast<std::int64_t>(d2.bins.size());
  r.pairs_h_d1 = detail::count_pairs(herald.bins, d1.bins, window_bins);
  r.pairs_h_d2 = detail::count_pairs(herald.bins, d2.bins, window_bins);
  r.pairs_d1_d2 = detail::count_pairs(d1.bins, d2.bins, window_bins);
  for (std::int64_t bin : herald.bins) {
    if (detail::has_tag_near(d1.bins, bin, window_bins) &&
        detail::has_tag_near(d2.bins, bin, window_bins))
      ++r.threefolds;
  }
  r.duration_s = herald.bin_width_s * static_cast<double>(herald.total_bins);
  return r;
}

struct CarResult {
  double car = 0.0;
  bool undefined = false;  // zero accidentals (or empty herald stream)
  std::int64_t coincidences = 0;
  std::int64_t accidentals = 0;
};

/// CAR from signal-herald correlations: same-bin coincidences divided by
/// coincidences at an adjacent-pulse offset.
inline CarResult compute_car(const TimetagStream& signal,
                             const TimetagStream& herald,
                             std::int64_t offset_bins) {
  if (signal.bin_width_s != herald.bin_width_s)
    throw std::invalid_argument("mismatched bin widths");
  CarResult r;
  r.coincidences = detail::count_pairs(herald.bins, signal.bins, 0);
  r.accidentals = detail::count_pairs(herald.bins, signal.bins, 0, offset_bins);
  if (herald.bins.empty() || r.accidentals == 0) {
    r.undefined = true;
    r.car = std::numeric_limits<double>::infinity();
    return r;
  }
  r.car = static_cast<double>(r.coincidences) / static_cast<double>(r.accidentals);
  return r;
}

struct HeraldingEstimate {
  double mu = 0.0;
  bool inconsistent = false;  // mu > 1 from the given inputs
};

/// mu = P(h|s) = P_cc / (P_h * eta_s)
inline HeraldingEstimate estimate_heralding_efficiency(double p_cc, double p_h,
                                                       double eta_s) {
  if (!(p_cc > 0.0 && p_cc <= 1.0) || !(p_h > 0.0 && p_h <= 1.0) ||
      !(eta_s > 0.0 && eta_s <= 1.0))
    throw std::domain_error("probabilities must be in (0, 1]");
  HeraldingEstimate e;
  e.mu = p_cc / (p_h * eta_s);
  e.inconsistent = e.mu > 1.0;
  return e;
}

// --- timetag file format ---------------------------------------------------
// header: bin_width_ps=<float>,total_bins=<int>,detector=<label>
// then one integer bin index per line, ascending.

inline void write_timetags(std::ostream& os, const TimetagStream& stream) {
  os << "bin_width_ps=" << stream.bin_width_s * 1e12
     << ",total_bins=" << stream.total_bins
     << ",detector=" << to_string(stream.detector) << "\n";
  for (std::int64_t bin : stream.bins) os << bin << "\n";
}

inline TimetagStream read_timetags(std::istream& is) {
  std::string header;
  if (!std::getline(is, header))
    throw std::runtime_error("timetag file: missing header");
  TimetagStream stream;
  std::istringstream hs(header);
  std::string field;
  while (std::getline(hs, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("timetag file: malformed header field: " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "bin_width_ps")
      stream.bin_width_s = std::stod(value) * 1e-12;
    else if (key == "total_bins")
      stream.total_bins = std::stoll(value);
    else if (key == "detector")
      stream.detector = detector_label_from_string(value);
    else
      throw std::runtime_error("timetag file: unknown header key: " + key);
  }
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    stream.bins.push_back(std::stoll(line));
  }
  stream.validate();
  return stream;
}

}  // namespace homsim
