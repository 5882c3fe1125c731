#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "homsim/acquisition.hpp"

using namespace homsim;

namespace {

TimetagStream make_stream(DetectorLabel label, std::vector<std::int64_t> bins,
                          double bin_width_s = 833.33e-12,
                          std::int64_t total_bins = 1000) {
  TimetagStream s;
  s.detector = label;
  s.bins = std::move(bins);
  s.bin_width_s = bin_width_s;
  s.total_bins = total_bins;
  s.validate();
  return s;
}

}  // namespace

TEST_CASE("detect: deterministic binning at unit efficiency") {
  DetectorConfig config;
  config.label = DetectorLabel::Snspd1;
  RngStream rng(1, 0);
  const double bw = 833.33e-12;
  const std::vector<double> arrivals = {0.0, 0.5 * bw, 3.2 * bw, 10.4 * bw};
  const auto stream = detect(arrivals, config, bw, 20.0 * bw, rng);
  CHECK(stream.detector == DetectorLabel::Snspd1);
  CHECK(stream.total_bins == 20);
  // same-bin events collapse to one tag
  CHECK(stream.bins == std::vector<std::int64_t>{0, 3, 10});
  CHECK_NOTHROW(stream.validate());
}

TEST_CASE("detect: rejects out-of-range arrivals") {
  DetectorConfig config;
  RngStream rng(1, 0);
  const std::vector<double> late = {2.0};
  CHECK_THROWS_AS(detect(late, config, 1e-9, 1.0, rng), std::domain_error);
  const std::vector<double> early = {-1e-12};
  CHECK_THROWS_AS(detect(early, config, 1e-9, 1.0, rng), std::domain_error);
}

TEST_CASE("detect: efficiency thinning and dark rate") {
  DetectorConfig config;
  config.efficiency = 0.72;
  RngStream rng(9, 0);
  const double bw = 1e-9;
  std::vector<double> arrivals;
  const int n = 200000;
  arrivals.reserve(n);
  for (int i = 0; i < n; ++i) arrivals.push_back((4.0 * i + 0.5) * bw);
  const auto stream = detect(arrivals, config, bw, 4.0 * n * bw, rng);
  const double frac = static_cast<double>(stream.bins.size()) / n;
  CHECK_THAT(frac, Catch::Matchers::WithinAbs(0.72, 5.0 * 0.45 / std::sqrt(n)));

  DetectorConfig dark_only;
  dark_only.efficiency = 0.0;
  dark_only.dark_prob_per_bin = 1.55e-4;
  RngStream rng2(10, 0);
  const auto darks = detect({}, dark_only, bw, 4.0 * n * bw, rng2);
  const double rate = static_cast<double>(darks.bins.size()) / (4.0 * n);
  CHECK_THAT(rate, Catch::Matchers::WithinRel(1.55e-4, 0.1));
  CHECK_NOTHROW(darks.validate());
}

TEST_CASE("count_threefold: hand-built coincidences") {
  const auto herald = make_stream(DetectorLabel::Herald, {5, 20, 40, 60});
  const auto d1 = make_stream(DetectorLabel::Snspd1, {5, 20, 41, 90});
  const auto d2 = make_stream(DetectorLabel::Snspd2, {5, 21, 40, 60});

  SECTION("same-bin window") {
    const auto r = count_threefold(herald, d1, d2, 0);
    CHECK(r.threefolds == 1);  // only bin 5
    CHECK(r.singles_herald == 4);
    CHECK(r.pairs_h_d1 == 2);   // 5, 20
    CHECK(r.pairs_h_d2 == 3);   // 5, 40, 60
    CHECK(r.pairs_d1_d2 == 1);  // only bin 5 matches at window 0
    CHECK_THAT(r.duration_s, Catch::Matchers::WithinRel(833.33e-12 * 1000, 1e-12));
  }

  SECTION("one-bin window") {
    const auto r = count_threefold(herald, d1, d2, 1);
    CHECK(r.threefolds == 3);  // 5, 20 (d2 at 21), 40 (d1 at 41)
  }

  SECTION("mismatched bin widths throw") {
    auto bad = d2;
    bad.bin_width_s *= 2.0;
    CHECK_THROWS_AS(count_threefold(herald, d1, bad, 0), std::invalid_argument);
  }

  SECTION("negative window throws") {
    CHECK_THROWS_AS(count_threefold(herald, d1, d2, -1), std::domain_error);
  }
}

TEST_CASE("count_threefold: window-0 pair at adjacent bins is not counted") {
  const auto herald = make_stream(DetectorLabel::Herald, {10});
  const auto d1 = make_stream(DetectorLabel::Snspd1, {11});
  const auto d2 = make_stream(DetectorLabel::Snspd2, {10});
  CHECK(count_threefold(herald, d1, d2, 0).threefolds == 0);
  CHECK(count_threefold(herald, d1, d2, 1).threefolds == 1);
}

TEST_CASE("compute_car") {
  std::vector<std::int64_t> h;
  for (int i = 0; i < 10; ++i) h.push_back(12 * i);
  const auto herald = make_stream(DetectorLabel::Herald, h);

  SECTION("finite CAR") {
    std::vector<std::int64_t> sig = {0, 12, 24, 36, 48, 61, 73};
    const auto signal = make_stream(DetectorLabel::Snspd1, sig);
    const auto r = compute_car(signal, herald, 12 + 1);
    // coincidences: bins 0,12,24,36,48 -> 5; accidentals at +13: 61,73 -> 2
    CHECK(r.coincidences == 5);
    CHECK(r.accidentals == 2);
    CHECK_FALSE(r.undefined);
    CHECK_THAT(r.car, Catch::Matchers::WithinRel(2.5, 1e-12));
  }

  SECTION("undefined when no accidentals") {
    std::vector<std::int64_t> sig = {0, 12};
    const auto signal = make_stream(DetectorLabel::Snspd1, sig);
    const auto r = compute_car(signal, herald, 1);
    CHECK(r.undefined);
    CHECK(std::isinf(r.car));
  }

  SECTION("mismatched bin widths throw") {
    auto bad = make_stream(DetectorLabel::Snspd1, {0}, 1e-9);
    CHECK_THROWS_AS(compute_car(bad, herald, 12), std::invalid_argument);
  }
}

TEST_CASE("estimate_heralding_efficiency") {
  const auto e = estimate_heralding_efficiency(8e-6, 2.6e-4, 0.72);
  CHECK_THAT(e.mu, Catch::Matchers::WithinRel(0.042735, 1e-4));
  CHECK_FALSE(e.inconsistent);

  const auto bad = estimate_heralding_efficiency(0.5, 0.1, 0.5);
  CHECK(bad.inconsistent);

  CHECK_THROWS_AS(estimate_heralding_efficiency(0.0, 0.1, 0.5), std::domain_error);
  CHECK_THROWS_AS(estimate_heralding_efficiency(0.1, 0.1, 1.5), std::domain_error);
}

TEST_CASE("timetag file roundtrip") {
  const auto stream =
      make_stream(DetectorLabel::Snspd2, {0, 7, 12, 999}, 833.33e-12, 1000);
  std::stringstream ss;
  write_timetags(ss, stream);

  std::string header;
  std::getline(ss, header);
  CHECK(header.starts_with("bin_width_ps="));
  CHECK(header.find(",total_bins=1000,") != std::string::npos);
  CHECK(header.find("detector=snspd2") != std::string::npos);

  ss.clear();
  ss.seekg(0);
  const auto back = read_timetags(ss);
  CHECK(back.detector == stream.detector);
  CHECK(back.bins == stream.bins);
  CHECK(back.total_bins == stream.total_bins);
  CHECK_THAT(back.bin_width_s, Catch::Matchers::WithinRel(stream.bin_width_s, 1e-9));
}

TEST_CASE("timetag file: malformed input") {
  std::stringstream no_header("");
  CHECK_THROWS_AS(read_timetags(no_header), std::runtime_error);

  std::stringstream bad_key("bin_width_ps=833.33,bogus=1,detector=herald\n");
  CHECK_THROWS_AS(read_timetags(bad_key), std::runtime_error);

  std::stringstream bad_label("bin_width_ps=833.33,total_bins=10,detector=x\n");
  CHECK_THROWS_AS(read_timetags(bad_label), std::invalid_argument);

  // descending bins fail validation
  std::stringstream unsorted(
      "bin_width_ps=833.33,total_bins=10,detector=herald\n5\n3\n");
  CHECK_THROWS_AS(read_timetags(unsorted), std::domain_error);

  // out-of-range bin
  std::stringstream oob(
      "bin_width_ps=833.33,total_bins=10,detector=herald\n12\n");
  CHECK_THROWS_AS(read_timetags(oob), std::domain_error);
}

TEST_CASE("stream validation") {
  TimetagStream s;
  s.bin_width_s = 0.0;
  CHECK_THROWS_AS(s.validate(), std::domain_error);
  s.bin_width_s = 1e-9;
  s.total_bins = 10;
  s.bins = {3, 3};
  CHECK_THROWS_AS(s.validate(), std::domain_error);
  s.bins = {-1};
  CHECK_THROWS_AS(s.validate(), std::domain_error);
}
