#pragma once

// Gaussian location model: X_i ~ N(theta, tau^2) iid, Y_i | X_i ~ N(X_i, 1).
// The simulated log-likelihood is -1/2 sum (X_i - y_i)^2 - (n/2) log(2 pi).

#include <cmath>
#include <numbers>
#include <vector>

#include "sbim/rng.hpp"
#include "sbim/types.hpp"

namespace sbim::models {

struct GaussLocationModel {
  double tau = 30.0;
};

inline std::vector<double> gl_simulate_data(const GaussLocationModel& model, double theta, int n, Rng& rng) {
  std::vector<double> y(n);
  for (auto& v : y) v = theta + model.tau * rng.normal() + rng.normal();
  return y;
}

/// Sufficient statistics of the data for the fast simulator.
struct GlData {
  std::vector<double> y;
  double mean = 0.0;
  double ss = 0.0;  // sum (y_i - ybar)^2

  explicit GlData(std::vector<double> values) : y(std::move(values)) {
    if (y.empty()) throw DomainError("Gaussian location: no observations");
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (double v : y) ss += (v - mean) * (v - mean);
  }
  int n() const { return static_cast<int>(y.size()); }
};

/// Draws X_1..X_n and evaluates the simulated log-likelihood directly.
inline double gl_simulate_loglik_direct(const GaussLocationModel& model, const GlData& data, double theta, Rng& rng) {
  double ss = 0.0;
  for (double yi : data.y) {
    const double x = theta + model.tau * rng.normal();
    ss += (x - yi) * (x - yi);
  }
  return -0.5 * ss - 0.5 * data.n() * std::log(2.0 * std::numbers::pi);
}

/// Same law as the direct simulator in O(1): sum (X_i - y_i)^2 / tau^2 is
/// noncentral chi-square with n degrees of freedom and noncentrality
/// lambda = sum ((theta - y_i) / tau)^2, i.e. (Z + sqrt(lambda))^2 + chi2_{n-1}.
inline double gl_simulate_loglik(const GaussLocationModel& model, const GlData& data, double theta, Rng& rng) {
  const int n = data.n();
  const double t2 = model.tau * model.tau;
  const double lambda = (data.ss + n * (theta - data.mean) * (theta - data.mean)) / t2;
  const double z = rng.normal() + std::sqrt(lambda);
  const double rest = n > 1 ? rng.chi_squared(n - 1) : 0.0;
  return -0.5 * t2 * (z * z + rest) - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

/// Exact posterior under a flat prior: N(ybar, (tau^2 + 1)/n).
inline double gl_posterior_variance(const GaussLocationModel& model, int n) {
  return (model.tau * model.tau + 1.0) / n;
}

/// Exact log-likelihood sum log N(y_i; theta, tau^2 + 1).
inline double gl_exact_loglik(const GaussLocationModel& model, const GlData& data, double theta) {
  const double v = model.tau * model.tau + 1.0;
  const double n = data.n();
  return -0.5 * (data.ss + n * (theta - data.mean) * (theta - data.mean)) / v - 0.5 * n * std::log(2.0 * std::numbers::pi * v);
}

}  // namespace sbim::models
