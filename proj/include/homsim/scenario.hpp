#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "homsim/acquisition.hpp"
#include "homsim/core.hpp"
#include "homsim/link.hpp"
#include "homsim/sources.hpp"
#include "homsim/sync.hpp"

namespace homsim {

/// Scenario-file problem, anchored to the offending line.
struct ScenarioError : std::runtime_error {
  ScenarioError(const std::string& file, int line, const std::string& message)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
        line_number(line) {}
  int line_number;
};

struct ScanPlan {
  int half_range_steps = 20;  // scan runs -half..+half in pump-delay steps
  double integration_time_s = 60.0;
};

/// Complete experiment description; everything the pipeline needs.
struct Scenario {
  WcsSourceConfig wcs;
  EpsSourceConfig eps;
  double herald_filter_bw_rad_s = 0.0;  // effective herald-path filter
  double hom_filter_bw_rad_s = 0.0;     // filter before the 50:50 coupler
  FiberLink link;
  ClassicalChannel channel;
  ClockModel clock;
  DetectorConfig det_herald;
  DetectorConfig det_snspd1;
  DetectorConfig det_snspd2;
  double sample_rate_hz = 1.2e9;
  std::int64_t window_bins = 0;
  ScanPlan scan;
  std::uint64_t seed = 1;

  double bin_width_s() const { return 1.0 / sample_rate_hz; }

  /// Effective WCS spectral bandwidth: transform-limited pulse vs filter.
  AngularBandwidth bandwidth_a() const {
    return effective_bandwidth(pulse_to_angular_bandwidth(wcs.pulse_fwhm_s),
                               AngularBandwidth(hom_filter_bw_rad_s));
  }
  /// Effective heralded-photon bandwidth: pump pulse vs herald filter.
  AngularBandwidth bandwidth_b() const {
    return effective_bandwidth(pulse_to_angular_bandwidth(eps.pump_fwhm_s),
                               AngularBandwidth(herald_filter_bw_rad_s));
  }

  void validate() const {
    wcs.validate();
    eps.validate();
    link.validate();
    clock.validate();
    det_herald.validate();
    det_snspd1.validate();
    det_snspd2.validate();
    if (!(sample_rate_hz > 0.0)) throw std::domain_error("sample_rate must be > 0");
    if (!(herald_filter_bw_rad_s > 0.0 && hom_filter_bw_rad_s > 0.0))
      throw std::domain_error("filter bandwidths must be > 0");
    if (std::abs(wcs.rep_rate_hz - clock.rep_rate_hz) > 1e-6 * clock.rep_rate_hz)
      throw std::domain_error("source and clock rep rates must match");
    if (scan.half_range_steps < 0) throw std::domain_error("scan range must be >= 0");
    if (!(scan.integration_time_s > 0.0))
      throw std::domain_error("integration time must be > 0");
  }

  /// n_bar above ~0.1 leaves the weak-pulse regime; allowed, but worth a warning.
  bool n_bar_unusually_high() const { return wcs.n_bar > 0.1; }
};

namespace detail {

struct KeyValue {
  std::string value;
  int line = 0;
};

using SectionMap = std::map<std::string, std::map<std::string, KeyValue>>;

inline SectionMap parse_sections(std::istream& is, const std::string& file) {
  SectionMap sections;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto ltrim = line.find_first_not_of(" \t\r");
    if (ltrim == std::string::npos) continue;
    auto rtrim = line.find_last_not_of(" \t\r");
    line = line.substr(ltrim, rtrim - ltrim + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ScenarioError(file, lineno, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioError(file, lineno, "expected key = value");
    if (section.empty())
      throw ScenarioError(file, lineno, "key outside any [section]");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    key = trim(key);
    value = trim(value);
    if (key.empty() || value.empty())
      throw ScenarioError(file, lineno, "empty key or value");
    sections[section][key] = {value, lineno};
  }
  return sections;
}

class SectionReader {
 public:
  SectionReader(const SectionMap& map, const std::string& file) : map_(map), file_(file) {}

  double number(const std::string& section, const std::string& key) const {
    const auto& kv = find(section, key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(kv.value, &pos);
      if (pos != kv.value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ScenarioError(file_, kv.line, "not a number: " + kv.value);
    }
  }

  double number_or(const std::string& section, const std::string& key,
                   double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
  }

  std::string text(const std::string& section, const std::string& key) const {
    return find(section, key).value;
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = map_.find(section);
    return s != map_.end() && s->second.count(key) > 0;
  }

  int line_of(const std::string& section, const std::string& key) const {
    return find(section, key).line;
  }

 private:
  const KeyValue& find(const std::string& section, const std::string& key) const {
    const auto s = map_.find(section);
    if (s == map_.end())
      throw ScenarioError(file_, 0, "missing section [" + section + "]");
    const auto k = s->second.find(key);
    if (k == s->second.end())
      throw ScenarioError(file_, 0,
                          "missing key '" + key + "' in section [" + section + "]");
    return k->second;
  }

  const SectionMap& map_;
  std::string file_;
};

}  // namespace detail

inline Scenario parse_scenario(std::istream& is, const std::string& file = "<stream>") {
  const auto sections = detail::parse_sections(is, file);
  const detail::SectionReader r(sections, file);
  Scenario s;

  s.wcs.n_bar = r.number("wcs", "n_bar");
  s.wcs.pulse_fwhm_s = r.number("wcs", "pulse_fwhm_ps") * 1e-12;
  s.wcs.rep_rate_hz = r.number("wcs", "rep_rate_mhz") * 1e6;
  s.wcs.center_offset_s = r.number_or("wcs", "center_offset_ps", 0.0) * 1e-12;

  s.eps.car = r.number("eps", "car");
  s.eps.pair_prob = r.has("eps", "pair_prob") ? r.number("eps", "pair_prob")
                                              : car_to_pair_prob(s.eps.car);
  s.eps.delay_step_s = r.number("eps", "delay_step_ps") * 1e-12;
  s.eps.herald_efficiency = r.number("eps", "herald_efficiency");
  s.eps.signal_efficiency = r.number("eps", "signal_efficiency");
  s.eps.pump_fwhm_s = r.number("eps", "pump_fwhm_ps") * 1e-12;

  s.herald_filter_bw_rad_s =
      2.0 * std::numbers::pi * r.number("filters", "herald_filter_ghz") * 1e9;
  s.hom_filter_bw_rad_s =
      2.0 * std::numbers::pi * r.number("filters", "hom_filter_ghz") * 1e9;

  s.link.length_m = r.number("link", "length_m");
  s.link.loss_db = r.number("link", "loss_db");
  s.link.raman_coeff = r.number_or("link", "raman_coeff", 0.0);
  s.channel.launch_power_dbm = r.number("link", "launch_power_dbm");
  if (r.has("link", "direction")) {
    const std::string d = r.text("link", "direction");
    if (d == "counter")
      s.channel.direction = Propagation::Counter;
    else if (d == "co")
      s.channel.direction = Propagation::Co;
    else
      throw ScenarioError(file, r.line_of("link", "direction"),
                          "direction must be 'co' or 'counter'");
  }

  s.clock.rep_rate_hz = r.number("clock", "rep_rate_mhz") * 1e6;
  s.clock.recovered_jitter_rms_s = r.number("clock", "jitter_rms_ps") * 1e-12;
  s.clock.static_offset_s = r.number_or("clock", "static_offset_ps", 0.0) * 1e-12;

  auto detector = [&](const std::string& sec, DetectorLabel label) {
    DetectorConfig d;
    d.label = label;
    d.efficiency = r.number(sec, "efficiency");
    d.dark_prob_per_bin = r.number(sec, "dark_prob_per_bin");
    return d;
  };
  s.det_herald = detector("detector.herald", DetectorLabel::Herald);
  s.det_snspd1 = detector("detector.snspd1", DetectorLabel::Snspd1);
  s.det_snspd2 = detector("detector.snspd2", DetectorLabel::Snspd2);

  s.sample_rate_hz = r.number("correlator", "sample_rate_ghz") * 1e9;
  s.window_bins = static_cast<std::int64_t>(r.number_or("correlator", "window_bins", 0.0));

  s.scan.half_range_steps = static_cast<int>(r.number("scan", "steps"));
  s.scan.integration_time_s = r.number("scan", "integration_time_s");

  s.seed = static_cast<std::uint64_t>(r.number("run", "seed"));

  try {
    s.validate();
  } catch (const std::domain_error& e) {
    throw ScenarioError(file, 0, e.what());
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file: " + path);
  return parse_scenario(f, path);
}

inline void write_scenario(std::ostream& os, const Scenario& s) {
  os.precision(17);
  os << "[wcs]\n"
     << "n_bar = " << s.wcs.n_bar << "\n"
     << "pulse_fwhm_ps = " << s.wcs.pulse_fwhm_s * 1e12 << "\n"
     << "rep_rate_mhz = " << s.wcs.rep_rate_hz * 1e-6 << "\n"
     << "center_offset_ps = " << s.wcs.center_offset_s * 1e12 << "\n\n"
     << "[eps]\n"
     << "car = " << s.eps.car << "\n"
     << "pair_prob = " << s.eps.pair_prob << "\n"
     << "delay_step_ps = " << s.eps.delay_step_s * 1e12 << "\n"
     << "herald_efficiency = " << s.eps.herald_efficiency << "\n"
     << "signal_efficiency = " << s.eps.signal_efficiency << "\n"
     << "pump_fwhm_ps = " << s.eps.pump_fwhm_s * 1e12 << "\n\n"
     << "[filters]\n"
     << "herald_filter_ghz = " << s.herald_filter_bw_rad_s / (2e9 * std::numbers::pi)
     << "\n"
     << "hom_filter_ghz = " << s.hom_filter_bw_rad_s / (2e9 * std::numbers::pi)
     << "\n\n"
     << "[link]\n"
     << "length_m = " << s.link.length_m << "\n"
     << "loss_db = " << s.link.loss_db << "\n"
     << "raman_coeff = " << s.link.raman_coeff << "\n"
     << "launch_power_dbm = " << s.channel.launch_power_dbm << "\n"
     << "direction = "
     << (s.channel.direction == Propagation::Co ? "co" : "counter") << "\n\n"
     << "[clock]\n"
     << "rep_rate_mhz = " << s.clock.rep_rate_hz * 1e-6 << "\n"
     << "jitter_rms_ps = " << s.clock.recovered_jitter_rms_s * 1e12 << "\n"
     << "static_offset_ps = " << s.clock.static_offset_s * 1e12 << "\n\n";
  auto det = [&](const char* sec, const DetectorConfig& d) {
    os << "[" << sec << "]\n"
       << "efficiency = " << d.efficiency << "\n"
       << "dark_prob_per_bin = " << d.dark_prob_per_bin << "\n\n";
  };
  det("detector.herald", s.det_herald);
  det("detector.snspd1", s.det_snspd1);
  det("detector.snspd2", s.det_snspd2);
  os << "[correlator]\n"
     << "sample_rate_ghz = " << s.sample_rate_hz * 1e-9 << "\n"
     << "window_bins = " << s.window_bins << "\n\n"
     << "[scan]\n"
     << "steps = " << s.scan.half_range_steps << "\n"
     << "integration_time_s = " << s.scan.integration_time_s << "\n\n"
     << "[run]\n"
     << "seed = " << s.seed << "\n";
}

/// One-line digest used to stamp derived artifacts.
inline std::string scenario_digest(const Scenario& s) {
  std::ostringstream os;
  os << "n_bar=" << s.wcs.n_bar << " car=" << s.eps.car
     << " loss_db=" << s.link.loss_db
     << " jitter_ps=" << s.clock.recovered_jitter_rms_s * 1e12
     << " seed=" << s.seed;
  return os.str();
}

}  // namespace homsim
