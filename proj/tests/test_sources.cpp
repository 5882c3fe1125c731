#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "homsim/sources.hpp"

using namespace homsim;

namespace {

WcsSourceConfig wcs_config(double n_bar) {
  WcsSourceConfig c;
  c.n_bar = n_bar;
  c.pulse_fwhm_s = 80e-12;
  c.rep_rate_hz = 100e6;
  return c;
}

EpsSourceConfig eps_config() {
  EpsSourceConfig c;
  c.car = 40.0;
  c.pair_prob = car_to_pair_prob(c.car);
  c.herald_efficiency = 0.0101;
  c.signal_efficiency = 0.04;
  return c;
}

}  // namespace

TEST_CASE("car_to_pair_prob") {
  CHECK_THAT(car_to_pair_prob(40.0), Catch::Matchers::WithinRel(1.0 / 39.0, 1e-12));
  CHECK_THAT(car_to_pair_prob(101.0), Catch::Matchers::WithinRel(0.01, 1e-12));
  CHECK_THROWS_AS(car_to_pair_prob(2.0), std::domain_error);
  CHECK_THROWS_AS(car_to_pair_prob(1.0), std::domain_error);
  CHECK_THROWS_AS(car_to_pair_prob(0.5), std::domain_error);
}

TEST_CASE("sample_wcs: Poisson statistics") {
  const auto config = wcs_config(0.007);
  RngStream rng(42, 0);
  const int n = 10'000'000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto rec = sample_wcs(config, i, rng);
    sum += rec.photons_a;
    sum_sq += static_cast<double>(rec.photons_a) * rec.photons_a;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(mean > 0.0069);
  CHECK(mean < 0.0071);
  // Poisson: variance matches mean within 3 sigma
  CHECK_THAT(var, Catch::Matchers::WithinAbs(mean, 3.0 * 0.007 / std::sqrt(n)));
}

TEST_CASE("sample_wcs: degenerate and timing") {
  auto config = wcs_config(0.0);
  RngStream rng(1, 0);
  for (int i = 0; i < 1000; ++i)
    CHECK(sample_wcs(config, i, rng).photons_a == 0);

  config.center_offset_s = 3e-12;
  const auto rec = sample_wcs(config, 5, rng);
  CHECK_THAT(rec.emission_time_s, Catch::Matchers::WithinRel(50e-9 + 3e-12, 1e-12));
}

TEST_CASE("sample_eps: pump delay shifts emission times only") {
  auto config = eps_config();
  RngStream rng(7, 0);
  const auto base = sample_eps(config, 10, 100e6, rng);
  auto shifted_cfg = set_pump_delay(config, 7);
  CHECK_THAT(shifted_cfg.pump_delay_s, Catch::Matchers::WithinRel(70e-12, 1e-12));
  RngStream rng2(7, 0);
  const auto shifted = sample_eps(shifted_cfg, 10, 100e6, rng2);
  CHECK(shifted.pairs == base.pairs);
  CHECK_THAT(shifted.emission_time_s - base.emission_time_s,
             Catch::Matchers::WithinRel(70e-12, 1e-9));
}

TEST_CASE("set_pump_delay") {
  auto config = eps_config();
  CHECK(set_pump_delay(config, 0).pump_delay_s == 0.0);
  CHECK_THAT(set_pump_delay(config, -5).pump_delay_s,
             Catch::Matchers::WithinRel(-50e-12, 1e-12));
  // scan of +-20 steps covers +-200 ps, beyond the ~86 ps-wide dip
  CHECK(std::abs(set_pump_delay(config, 20).pump_delay_s) > 2.0 * 86e-12 / 2.0);
}

TEST_CASE("herald never fires with zero efficiency and no accidentals") {
  auto config = eps_config();
  config.herald_efficiency = 0.0;
  config.car = 1.0 + 1.0 / config.pair_prob;  // no accidental-herald excess
  RngStream rng(3, 0);
  for (int i = 0; i < 20000; ++i) {
    const auto rec = sample_eps(config, i, 100e6, rng);
    if (rec.accidental_heralds == 0) CHECK_FALSE(herald_fires(config, rec, rng));
  }
}

TEST_CASE("photon-number marginals are pump-delay invariant") {
  auto config = eps_config();
  const int n = 200000;
  std::array<long, 4> hist0{}, hist7{};
  RngStream a(11, 0), b(11, 0);
  auto shifted = set_pump_delay(config, 7);
  for (int i = 0; i < n; ++i) {
    hist0[std::min<std::size_t>(3, static_cast<std::size_t>(
        sample_eps(config, i, 100e6, a).pairs))]++;
    hist7[std::min<std::size_t>(3, static_cast<std::size_t>(
        sample_eps(shifted, i, 100e6, b).pairs))]++;
  }
  // same seed, same draw sequence: identical marginals
  CHECK(hist0 == hist7);
}

TEST_CASE("emission sequences are reproducible per seed") {
  const auto config = eps_config();
  RngStream a(99, 5), b(99, 5);
  for (int i = 0; i < 1000; ++i) {
    const auto ra = sample_eps(config, i, 100e6, a);
    const auto rb = sample_eps(config, i, 100e6, b);
    CHECK(ra.pairs == rb.pairs);
    CHECK(ra.accidental_heralds == rb.accidental_heralds);
  }
}

TEST_CASE("config validation") {
  auto eps = eps_config();
  eps.pump_delay_s = 15e-12;  // not a multiple of 10 ps
  CHECK_THROWS_AS(eps.validate(), std::domain_error);
  eps = eps_config();
  eps.pair_prob = 0.0;
  CHECK_THROWS_AS(eps.validate(), std::domain_error);

  auto wcs = wcs_config(0.007);
  wcs.pulse_fwhm_s = 0.0;
  CHECK_THROWS_AS(wcs.validate(), std::domain_error);
}
