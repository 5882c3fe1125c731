#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace homsim {

/// Model y = f(x, params). The Jacobian is formed by forward differences
/// unless an analytic gradient is supplied.
using ModelFn = std::function<double(double x, std::span<const double> params)>;
using ModelGradFn =
    std::function<void(double x, std::span<const double> params, std::span<double> grad)>;

struct LeastSquaresOptions {
  int max_iterations = 200;
  double param_rel_tol = 1e-8;
  double initial_damping = 1e-3;
};

struct LeastSquaresResult {
  std::vector<double> params;
  std::vector<std::vector<double>> covariance;  // (J^T W J)^-1 at the optimum
  bool converged = false;
  bool singular = false;
  double chi2 = 0.0;
  int iterations = 0;
};

namespace detail {

// Solve A x = b in place for a small dense symmetric system; returns false
// if the pivoting hits a (near-)zero.
inline bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                        std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return true;
}

// Inversion via the diagonally normalized (correlation-form) matrix, so the
// rank check is insensitive to parameter scales; rejects matrices whose
// normalized pivots collapse (rank-deficient Jacobians).
inline bool invert_dense(const std::vector<std::vector<double>>& a,
                         std::vector<std::vector<double>>& inv) {
  const std::size_t n = a.size();
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a[i][i] > 0.0)) return false;
    scale[i] = std::sqrt(a[i][i]);
  }
  std::vector<std::vector<double>> norm(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      norm[i][j] = a[i][j] / (scale[i] * scale[j]);

  inv.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t col = 0; col < n; ++col) {
    auto m = norm;
    std::vector<double> b(n, 0.0), x;
    b[col] = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t pivot = c;
      for (std::size_t r = c + 1; r < n; ++r)
        if (std::abs(m[r][c]) > std::abs(m[pivot][c])) pivot = r;
      if (std::abs(m[pivot][c]) < 1e-12) return false;
      std::swap(m[c], m[pivot]);
      std::swap(b[c], b[pivot]);
      for (std::size_t r = c + 1; r < n; ++r) {
        const double f = m[r][c] / m[c][c];
        for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
        b[r] -= f * b[c];
      }
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      double s = b[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= m[i][k] * x[k];
      x[i] = s / m[i][i];
    }
    for (std::size_t r = 0; r < n; ++r) inv[r][col] = x[r] / (scale[r] * scale[col]);
  }
  return true;
}

}  // namespace detail

/// Weighted nonlinear least squares (Gauss-Newton with Levenberg-style
/// damping). Weights are 1/sigma^2. Converged when the largest relative
/// parameter change drops below param_rel_tol.
inline LeastSquaresResult fit_least_squares(
    std::span<const double> x, std::span<const double> y,
    std::span<const double> sigma, const ModelFn& model,
    std::vector<double> initial, const ModelGradFn& gradient = nullptr,
    const LeastSquaresOptions& options = {}) {
  const std::size_t n = x.size();
  const std::size_t np = initial.size();
  if (y.size() != n || sigma.size() != n)
    throw std::invalid_argument("x, y, sigma must have equal length");
  if (n < np) throw std::invalid_argument("fewer points than parameters");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("sigma must be > 0");

  auto chi2_of = [&](const std::vector<double>& p) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = (y[i] - model(x[i], p)) / sigma[i];
      c += r * r;
    }
    return c;
  };

  auto jacobian_row = [&](double xi, const std::vector<double>& p,
                          std::vector<double>& row) {
    if (gradient) {
      gradient(xi, p, row);
      return;
    }
    std::vector<double> pp = p;
    const double f0 = model(xi, pp);
    for (std::size_t j = 0; j < np; ++j) {
      const double h = 1e-7 * std::max(std::abs(p[j]), 1e-12);
      pp[j] = p[j] + h;
      row[j] = (model(xi, pp) - f0) / h;
      pp[j] = p[j];
    }
  };

  LeastSquaresResult result;
  result.params = std::move(initial);
  double lambda = options.initial_damping;
  double chi2 = chi2_of(result.params);

  std::vector<std::vector<double>> jtj(np, std::vector<double>(np));
  std::vector<double> jtr(np), row(np), step;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    for (auto& r : jtj) std::fill(r.begin(), r.end(), 0.0);
    std::fill(jtr.begin(), jtr.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      jacobian_row(x[i], result.params, row);
      const double w = 1.0 / (sigma[i] * sigma[i]);
      const double r = y[i] - model(x[i], result.params);
      for (std::size_t a = 0; a < np; ++a) {
        jtr[a] += w * row[a] * r;
        for (std::size_t b = a; b < np; ++b) jtj[a][b] += w * row[a] * row[b];
      }
    }
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

    bool stepped = false;
    for (int attempt = 0; attempt < 16; ++attempt) {
      auto damped = jtj;
      for (std::size_t a = 0; a < np; ++a)
        damped[a][a] += lambda * std::max(jtj[a][a], 1e-300);
      if (!detail::solve_dense(damped, jtr, step)) {
        result.singular = true;
        result.chi2 = chi2;
        return result;
      }
      std::vector<double> trial = result.params;
      for (std::size_t a = 0; a < np; ++a) trial[a] += step[a];
      const double trial_chi2 = chi2_of(trial);
      if (trial_chi2 <= chi2 + 1e-14) {
        double max_rel = 0.0;
        for (std::size_t a = 0; a < np; ++a) {
          const double scale = std::max(std::abs(result.params[a]), 1e-12);
          max_rel = std::max(max_rel, std::abs(step[a]) / scale);
        }
        result.params = std::move(trial);
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (max_rel < options.param_rel_tol) {
          result.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (result.converged) break;
    if (!stepped) {
      // Damping exhausted without improvement: local minimum to machine
      // precision; accept as converged.
      result.converged = true;
      break;
    }
  }

  result.chi2 = chi2;
  // covariance from the undamped normal matrix at the optimum
  for (auto& r : jtj) std::fill(r.begin(), r.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    jacobian_row(x[i], result.params, row);
    const double w = 1.0 / (sigma[i] * sigma[i]);
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = a; b < np; ++b) jtj[a][b] += w * row[a] * row[b];
  }
  for (std::size_t a = 0; a < np; ++a)
    for (std::size_t b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];
  if (!detail::invert_dense(jtj, result.covariance)) {
    result.singular = true;
    result.converged = false;
  }
  return result;
}

}  // namespace homsim
