#pragma once

// Gamma-Poisson model: X_i ~ Gamma(shape gamma, rate lambda) iid, Y_i | X_i ~ Poisson(X_i).
// The marginal of Y_i is negative binomial, so the exact likelihood is
// available; the simulated log-likelihood uses one latent draw per observation.

#include <cmath>
#include <vector>

#include "sbim/rng.hpp"
#include "sbim/types.hpp"

namespace sbim::models {

struct GammaPoissonModel {
  double gamma_shape = 1.0;
  int n = 0;

  void validate() const {
    if (!(gamma_shape > 0.0) || !std::isfinite(gamma_shape)) throw DomainError("gamma-Poisson: shape must be positive");
  }
};

/// Counts y_1..y_n from the model at rate lambda.
inline std::vector<int> gp_simulate_data(const GammaPoissonModel& model, double lambda, Rng& rng) {
  model.validate();
  if (!(lambda > 0.0)) throw DomainError("gamma-Poisson: lambda must be positive");
  std::vector<int> y(model.n);
  for (int i = 0; i < model.n; ++i) y[i] = rng.poisson(rng.gamma(model.gamma_shape, lambda));
  return y;
}

struct GpSimulation {
  double total = 0.0;
  Vector per_obs;
};

/// Data in the form the simulator needs: counts plus log(y_i!).
struct GpData {
  std::vector<int> y;
  std::vector<double> log_factorial;

  explicit GpData(std::vector<int> counts) : y(std::move(counts)), log_factorial(y.size()) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] < 0) throw DomainError("gamma-Poisson: counts must be nonnegative");
      log_factorial[i] = std::lgamma(y[i] + 1.0);
    }
  }
  int n() const { return static_cast<int>(y.size()); }
  long long total() const {
    long long s = 0;
    for (int v : y) s += v;
    return s;
  }
};

/// Simulated log-likelihood sum_i log Poisson(y_i | X_i), X_i ~ Gamma(gamma, lambda).
inline GpSimulation gp_simulate_loglik(const GammaPoissonModel& model, const GpData& data, double lambda, Rng& rng) {
  model.validate();
  if (!(lambda > 0.0)) throw DomainError("gamma-Poisson: lambda must be positive");
  GpSimulation out;
  out.per_obs.resize(data.n());
  std::gamma_distribution<double> draw(model.gamma_shape, 1.0 / lambda);
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double x = draw(rng);
    const int yi = data.y[i];
    double v;
    if (x > 0.0)
      v = yi * std::log(x) - x - data.log_factorial[i];
    else
      v = yi == 0 ? 0.0 : -kInf;
    out.per_obs(i) = v;
    total += v;
  }
  out.total = total;
  return out;
}

inline GpSimulation gp_simulate_loglik(const GammaPoissonModel& model, const std::vector<int>& y, double lambda,
                                       Rng& rng) {
  return gp_simulate_loglik(model, GpData(y), lambda, rng);
}

/// Exact log-likelihood: negative binomial with size gamma and success probability lambda/(1+lambda).
inline double gp_exact_loglik(const GammaPoissonModel& model, const std::vector<int>& y, double lambda) {
  model.validate();
  if (!(lambda > 0.0)) throw DomainError("gamma-Poisson: lambda must be positive");
  const double g = model.gamma_shape;
  const double log_p = std::log(lambda / (1.0 + lambda));
  const double log_q = -std::log1p(lambda);
  double total = 0.0;
  for (int yi : y) {
    if (yi < 0) throw DomainError("gamma-Poisson: counts must be nonnegative");
    total += std::lgamma(yi + g) - std::lgamma(g) - std::lgamma(yi + 1.0) + g * log_p + yi * log_q;
  }
  return total;
}

/// Maximizer n gamma / sum(y) of the expected simulated log-likelihood.
inline double gp_mesle(const GammaPoissonModel& model, const std::vector<int>& y) {
  double s = 0.0;
  for (int v : y) s += v;
  if (!(s > 0.0)) throw DomainError("gamma-Poisson: MESLE undefined for all-zero counts");
  return static_cast<double>(y.size()) * model.gamma_shape / s;
}

}  // namespace sbim::models
