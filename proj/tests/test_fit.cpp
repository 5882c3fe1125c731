#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "homsim/fit.hpp"
#include "homsim/rng.hpp"

using namespace homsim;

TEST_CASE("fit_least_squares: exact straight line") {
  std::vector<double> x, y, s;
  for (int i = 0; i < 10; ++i) {
    x.push_back(i);
    y.push_back(3.0 + 0.5 * i);
    s.push_back(1.0);
  }
  auto model = [](double t, std::span<const double> p) { return p[0] + p[1] * t; };
  auto r = fit_least_squares(x, y, s, model, {0.0, 0.0});
  REQUIRE(r.converged);
  CHECK_THAT(r.params[0], Catch::Matchers::WithinAbs(3.0, 1e-8));
  CHECK_THAT(r.params[1], Catch::Matchers::WithinAbs(0.5, 1e-9));
  CHECK(r.chi2 < 1e-12);

  // unit-sigma line: covariance is (X^T X)^-1 with known closed form
  const double n = 10.0, sx = 45.0, sxx = 285.0;
  const double det = n * sxx - sx * sx;
  CHECK_THAT(r.covariance[0][0], Catch::Matchers::WithinRel(sxx / det, 1e-6));
  CHECK_THAT(r.covariance[1][1], Catch::Matchers::WithinRel(n / det, 1e-6));
  CHECK_THAT(r.covariance[0][1], Catch::Matchers::WithinRel(-sx / det, 1e-6));
}

TEST_CASE("fit_least_squares: weights scale the covariance") {
  std::vector<double> x, y, s1, s2;
  for (int i = 0; i < 12; ++i) {
    x.push_back(i);
    y.push_back(1.0 + 2.0 * i);
    s1.push_back(1.0);
    s2.push_back(3.0);
  }
  auto model = [](double t, std::span<const double> p) { return p[0] + p[1] * t; };
  auto a = fit_least_squares(x, y, s1, model, {0.5, 1.5});
  auto b = fit_least_squares(x, y, s2, model, {0.5, 1.5});
  CHECK_THAT(b.covariance[0][0], Catch::Matchers::WithinRel(9.0 * a.covariance[0][0], 1e-6));
  CHECK_THAT(b.covariance[1][1], Catch::Matchers::WithinRel(9.0 * a.covariance[1][1], 1e-6));
}

TEST_CASE("fit_least_squares: Gaussian dip, numeric vs analytic gradient") {
  const double c = 250.0, v = 0.63, tau = 43e-12, t0 = 5e-12;
  std::vector<double> x, y, s;
  for (int i = -20; i <= 20; ++i) {
    const double t = 10e-12 * i;
    const double z = (t - t0) / tau;
    x.push_back(t);
    y.push_back(c * (1.0 - v * std::exp(-z * z)));
    s.push_back(std::sqrt(y.back()));
  }
  auto model = [](double t, std::span<const double> p) {
    const double z = (t - p[3]) / p[2];
    return p[0] * (1.0 - p[1] * std::exp(-z * z));
  };
  auto grad = [](double t, std::span<const double> p, std::span<double> g) {
    const double z = (t - p[3]) / p[2];
    const double e = std::exp(-z * z);
    g[0] = 1.0 - p[1] * e;
    g[1] = -p[0] * e;
    g[2] = -p[0] * p[1] * e * 2.0 * z * z / p[2];
    g[3] = -p[0] * p[1] * e * 2.0 * z / p[2];
  };
  std::vector<double> init = {220.0, 0.5, 60e-12, 0.0};
  auto numeric = fit_least_squares(x, y, s, model, init);
  auto analytic = fit_least_squares(x, y, s, model, init, grad);
  for (auto* r : {&numeric, &analytic}) {
    REQUIRE(r->converged);
    CHECK_THAT(r->params[0], Catch::Matchers::WithinRel(c, 1e-6));
    CHECK_THAT(r->params[1], Catch::Matchers::WithinRel(v, 1e-6));
    CHECK_THAT(r->params[2], Catch::Matchers::WithinRel(tau, 1e-6));
    CHECK_THAT(r->params[3], Catch::Matchers::WithinAbs(t0, 1e-14));
  }
  for (int i = 0; i < 4; ++i)
    CHECK_THAT(analytic.covariance[i][i],
               Catch::Matchers::WithinRel(numeric.covariance[i][i], 1e-3));
}

TEST_CASE("fit_least_squares: noisy recovery within quoted errors") {
  RngStream rng(123, 0);
  auto model = [](double t, std::span<const double> p) {
    return p[0] * std::exp(-p[1] * t);
  };
  const double a = 100.0, k = 0.7;
  std::vector<double> x, y, s;
  for (int i = 0; i < 40; ++i) {
    const double t = 0.1 * i;
    x.push_back(t);
    y.push_back(a * std::exp(-k * t) + rng.normal(0.0, 1.0));
    s.push_back(1.0);
  }
  auto r = fit_least_squares(x, y, s, model, {80.0, 1.0});
  REQUIRE(r.converged);
  const double se_a = std::sqrt(r.covariance[0][0]);
  const double se_k = std::sqrt(r.covariance[1][1]);
  CHECK(std::abs(r.params[0] - a) < 4.0 * se_a);
  CHECK(std::abs(r.params[1] - k) < 4.0 * se_k);
  CHECK(r.chi2 / 38.0 > 0.4);
  CHECK(r.chi2 / 38.0 < 2.0);
}

TEST_CASE("fit_least_squares: degenerate parameterization is reported") {
  std::vector<double> x = {0, 1, 2, 3}, y = {1, 2, 3, 4}, s = {1, 1, 1, 1};
  // p0 and p1 only ever appear as a sum
  auto model = [](double t, std::span<const double> p) {
    return (p[0] + p[1]) * t;
  };
  auto r = fit_least_squares(x, y, s, model, {0.5, 0.5});
  CHECK(r.singular);
}

TEST_CASE("fit_least_squares: input validation") {
  std::vector<double> x = {0, 1, 2}, y = {0, 1}, s = {1, 1, 1};
  auto model = [](double t, std::span<const double> p) { return p[0] * t; };
  CHECK_THROWS_AS(fit_least_squares(x, y, s, model, {1.0}),
                  std::invalid_argument);
  y = {0, 1, 2};
  s = {1, 0.0, 1};
  CHECK_THROWS_AS(fit_least_squares(x, y, s, model, {1.0}),
                  std::invalid_argument);
  s = {1, 1, 1};
  CHECK_THROWS_AS(
      fit_least_squares(x, y, s, model, {1.0, 1.0, 1.0, 1.0}),
      std::invalid_argument);
}

TEST_CASE("solve_dense and invert_dense") {
  std::vector<std::vector<double>> a = {{4.0, 1.0}, {1.0, 3.0}};
  std::vector<double> x;
  REQUIRE(detail::solve_dense(a, {1.0, 2.0}, x));
  CHECK_THAT(x[0], Catch::Matchers::WithinRel(1.0 / 11.0, 1e-12));
  CHECK_THAT(x[1], Catch::Matchers::WithinRel(7.0 / 11.0, 1e-12));

  std::vector<std::vector<double>> inv;
  REQUIRE(detail::invert_dense(a, inv));
  CHECK_THAT(inv[0][0], Catch::Matchers::WithinRel(3.0 / 11.0, 1e-12));
  CHECK_THAT(inv[1][1], Catch::Matchers::WithinRel(4.0 / 11.0, 1e-12));
  CHECK_THAT(inv[0][1], Catch::Matchers::WithinRel(-1.0 / 11.0, 1e-12));

  std::vector<std::vector<double>> singular = {{1.0, 2.0}, {2.0, 4.0}};
  CHECK_FALSE(detail::invert_dense(singular, inv));
}
