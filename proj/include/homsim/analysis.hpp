#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "homsim/core.hpp"
#include "homsim/fit.hpp"

namespace homsim {

struct InterferogramPoint {
  double delay_s = 0.0;
  double counts = 0.0;
  double sigma = 1.0;  // sqrt(counts), or 1 for empty bins
};

struct Interferogram {
  std::vector<InterferogramPoint> points;
  double integration_time_s = 0.0;
  std::string meta;  // scenario digest

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!(points[i].sigma > 0.0)) throw std::domain_error("sigma must be > 0");
      if (i > 0 && !(points[i].delay_s > points[i - 1].delay_s))
        throw std::domain_error("delays must be strictly increasing");
    }
  }
};

inline double poisson_sigma(double counts) {
  return counts > 0.0 ? std::sqrt(counts) : 1.0;
}

/// Fitted parameter estimates with linearized errors and 95% intervals.
struct FitResult {
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> std_errors;
  std::vector<std::pair<double, double>> ci95;
  double reduced_chi2 = 0.0;
  bool converged = false;
  bool flagged = false;  // suspicious estimate (e.g. V outside [-0.1, 1.1])
  std::string flag_reason;
  std::vector<std::vector<double>> covariance;

  double param(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return params[i];
    throw std::invalid_argument("no such parameter: " + name);
  }
  double std_error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return std_errors[i];
    throw std::invalid_argument("no such parameter: " + name);
  }
  std::pair<double, double> ci(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return ci95[i];
    throw std::invalid_argument("no such parameter: " + name);
  }
};

inline double visibility_from_extrema(double c_max, double c_min) {
  if (!(c_max > 0.0)) throw std::domain_error("c_max must be > 0");
  if (!(c_min >= 0.0 && c_min <= c_max))
    throw std::domain_error("need 0 <= c_min <= c_max");
  return (c_max - c_min) / c_max;
}

/// Gaussian standard deviation associated with the dip width parameter:
/// sigma = 2 tau sqrt(ln 2).
inline double sigma_from_tau(double tau_s) {
  if (!(tau_s > 0.0)) throw std::domain_error("tau must be > 0");
  return 2.0 * tau_s * std::sqrt(std::numbers::ln2);
}

namespace detail {

inline FitResult package_fit(const LeastSquaresResult& ls,
                             std::vector<std::string> names,
                             std::size_t n_points) {
  FitResult fr;
  fr.names = std::move(names);
  fr.params = ls.params;
  fr.converged = ls.converged && !ls.singular;
  fr.covariance = ls.covariance;
  const std::size_t np = ls.params.size();
  fr.std_errors.assign(np, 0.0);
  fr.ci95.assign(np, {0.0, 0.0});
  for (std::size_t i = 0; i < np; ++i) {
    const double var = ls.covariance.empty() ? 0.0 : ls.covariance[i][i];
    fr.std_errors[i] = var > 0.0 ? std::sqrt(var) : 0.0;
    fr.ci95[i] = {ls.params[i] - 1.96 * fr.std_errors[i],
                  ls.params[i] + 1.96 * fr.std_errors[i]};
  }
  const double dof = static_cast<double>(n_points) - static_cast<double>(np);
  fr.reduced_chi2 = dof > 0.0 ? ls.chi2 / dof : 0.0;
  if (ls.singular) {
    fr.flagged = true;
    fr.flag_reason = "singular normal equations";
  }
  return fr;
}

}  // namespace detail

/// Reasonable starting point for the dip fit taken from the data itself.
inline DipModelParams dip_initial_guess(const Interferogram& data) {
  DipModelParams g;
  double cmax = 0.0, cmin = std::numeric_limits<double>::max();
  double tmin = 0.0;
  for (const auto& p : data.points) {
    cmax = std::max(cmax, p.counts);
    if (p.counts < cmin) {
      cmin = p.counts;
      tmin = p.delay_s;
    }
  }
  g.c_max = cmax;
  g.visibility = cmax > 0.0 ? std::clamp((cmax - cmin) / cmax, 0.01, 0.99) : 0.5;
  g.center = tmin;
  const double span = data.points.back().delay_s - data.points.front().delay_s;
  g.tau = span > 0.0 ? span / 8.0 : 40e-12;
  return g;
}

/// Weighted fit of C * (1 - V exp(-((t - t0)/tau)^2)).
/// Parameter order: c_max, visibility, tau, center.
inline FitResult fit_dip(const Interferogram& data, const DipModelParams& init) {
  data.validate();
  if (data.points.size() < 6)
    throw std::invalid_argument("dip fit needs at least 6 points");

  std::vector<double> x, y, s;
  for (const auto& p : data.points) {
    x.push_back(p.delay_s);
    y.push_back(p.counts);
    s.push_back(p.sigma);
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

  auto ls = fit_least_squares(x, y, s, model,
                              {init.c_max, init.visibility, init.tau, init.center},
                              grad);
  // tau enters squared; report the positive branch
  if (ls.params[2] < 0.0) ls.params[2] = -ls.params[2];
  auto fr = detail::package_fit(ls, {"c_max", "visibility", "tau", "center"},
                                data.points.size());
  const double v = fr.param("visibility");
  if (v < -0.1 || v > 1.1) {
    fr.flagged = true;
    fr.flag_reason = "visibility estimate outside [-0.1, 1.1]";
  }
  return fr;
}

struct VisibilityPoint {
  double n_bar = 0.0;
  double visibility = 0.0;
  double sigma = 0.0;
};

/// Weighted fit of the visibility model at t = 0 over (n_bar, V) points,
/// with bandwidths fixed. Bounds mu in (0, 1] and n_sys >= 0 are enforced
/// through a logit/log reparameterization; errors are mapped back by the
/// delta method and the reported 95% intervals are the hull of the linear
/// and transformed intervals.
inline FitResult fit_visibility_model(const std::vector<VisibilityPoint>& points,
                                      AngularBandwidth bw_a, AngularBandwidth bw_b,
                                      double init_mu = 0.02,
                                      double init_n_sys = 1e-4) {
  if (points.size() < 2)
    throw std::invalid_argument("visibility-model fit needs at least 2 points");
  for (const auto& p : points)
    if (!(p.n_bar > 0.0)) throw std::domain_error("n_bar must be > 0");

  const double s0 = spectral_factor(bw_a, bw_b, 0.0);
  std::vector<double> x, y, s;
  for (const auto& p : points) {
    x.push_back(p.n_bar);
    y.push_back(p.visibility);
    s.push_back(p.sigma > 0.0 ? p.sigma : 1.0);
  }

  auto model = [s0](double n, std::span<const double> th) {
    const double mu = 1.0 / (1.0 + std::exp(-th[0]));
    const double nsys = std::exp(th[1]);
    return s0 / (n / mu + 2.0 + nsys / (n * mu));
  };

  std::vector<double> theta0 = {std::log(init_mu / (1.0 - init_mu)),
                                std::log(init_n_sys)};
  auto ls = fit_least_squares(x, y, s, model, theta0);

  const double mu = 1.0 / (1.0 + std::exp(-ls.params[0]));
  const double nsys = std::exp(ls.params[1]);
  const double dmu = mu * (1.0 - mu);  // d mu / d theta0

  FitResult fr;
  fr.names = {"mu", "n_sys"};
  fr.params = {mu, nsys};
  fr.converged = ls.converged && !ls.singular;
  const double se_t0 = ls.covariance.empty() || ls.covariance[0][0] <= 0.0
                           ? 0.0
                           : std::sqrt(ls.covariance[0][0]);
  const double se_t1 = ls.covariance.empty() || ls.covariance[1][1] <= 0.0
                           ? 0.0
                           : std::sqrt(ls.covariance[1][1]);
  fr.std_errors = {se_t0 * dmu, se_t1 * nsys};
  auto hull = [](double est, double se, double lo_t, double hi_t) {
    return std::make_pair(std::min(est - 1.96 * se, lo_t),
                          std::max(est + 1.96 * se, hi_t));
  };
  fr.ci95 = {hull(mu, fr.std_errors[0],
                  1.0 / (1.0 + std::exp(-(ls.params[0] - 1.96 * se_t0))),
                  1.0 / (1.0 + std::exp(-(ls.params[0] + 1.96 * se_t0)))),
             hull(nsys, fr.std_errors[1], std::exp(ls.params[1] - 1.96 * se_t1),
                  std::exp(ls.params[1] + 1.96 * se_t1))};
  fr.covariance = ls.covariance;
  const double dof = static_cast<double>(points.size()) - 2.0;
  fr.reduced_chi2 = dof > 0.0 ? ls.chi2 / dof : 0.0;
  if (ls.singular) {
    fr.flagged = true;
    fr.flag_reason = "singular normal equations";
  } else if (std::abs(ls.params[0]) > 30.0 || ls.params[1] < -60.0) {
    fr.flagged = true;
    fr.flag_reason = "solution pinned at a parameter bound";
  }
  return fr;
}

// --- exports ---------------------------------------------------------------

inline void write_interferogram_csv(std::ostream& os, const Interferogram& data) {
  os << "delay_ps,counts,sigma\n";
  os << std::setprecision(12);
  for (const auto& p : data.points)
    os << p.delay_s * 1e12 << "," << p.counts << "," << p.sigma << "\n";
}

inline Interferogram read_interferogram_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("delay_ps,counts,sigma", 0) != 0)
    throw std::runtime_error("interferogram CSV: bad header");
  Interferogram data;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') ||
        !std::getline(ls, c, ','))
      throw std::runtime_error("interferogram CSV: malformed row " +
                               std::to_string(row));
    InterferogramPoint p;
    try {
      p.delay_s = std::stod(a) * 1e-12;
      p.counts = std::stod(b);
      p.sigma = std::stod(c);
    } catch (const std::exception&) {
      throw std::runtime_error("interferogram CSV: malformed row " +
                               std::to_string(row));
    }
    data.points.push_back(p);
  }
  data.validate();
  return data;
}

inline nlohmann::json fit_result_to_json(const FitResult& fr) {
  nlohmann::json params, errors, ci;
  for (std::size_t i = 0; i < fr.names.size(); ++i) {
    params[fr.names[i]] = fr.params[i];
    errors[fr.names[i]] = fr.std_errors[i];
    ci[fr.names[i]] = {fr.ci95[i].first, fr.ci95[i].second};
  }
  nlohmann::json j;
  j["params"] = params;
  j["std_errors"] = errors;
  j["ci95"] = ci;
  j["reduced_chi2"] = fr.reduced_chi2;
  j["converged"] = fr.converged;
  if (fr.flagged) j["flag"] = fr.flag_reason;
  return j;
}

}  // namespace homsim
