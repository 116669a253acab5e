#pragma once

// Reference computations used only by tests: they share no code with the
// library routines they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Asymptotic Kolmogorov tail with Stephens' small-sample correction.
inline double kolmogorov_pvalue(double D, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * D;
  if (lam < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov test p-value against a continuous CDF.
inline double ks_pvalue(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  return kolmogorov_pvalue(D, x.size());
}

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    D = std::max(D, std::abs(i / na - j / nb));
  }
  const double ne = na * nb / (na + nb);
  return kolmogorov_pvalue(D, static_cast<std::size_t>(ne));
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double std_error(const std::vector<double>& v) { return std::sqrt(variance(v) / v.size()); }

/// Weighted least squares via explicit inversion of the normal equations.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
  return (XtW * X).inverse() * (XtW * y);
}

/// Monomial design (1, t, t^2) for scalar points, built without the library helpers.
inline Eigen::MatrixXd poly_design_1d(const Eigen::VectorXd& t, int degree) {
  Eigen::MatrixXd X(t.size(), degree + 1);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    for (int k = 0; k <= degree; ++k) X(i, k) = std::pow(t(i), k);
  return X;
}

/// Log density of N(mean, cov) evaluated through an LU solve.
inline double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  const Eigen::VectorXd r = x - mean;
  const double logdet = std::log(std::abs(lu.determinant()));
  return -0.5 * (x.size() * std::log(2.0 * M_PI) + logdet + r.dot(lu.solve(r)));
}

}  // namespace oracle
