#pragma once

// Stochastic volatility: r_i = exp(s_i) W_i with W_i ~ t_5, and
// s_1 = tau V_1, s_i = kappa s_{i-1} + tau sqrt(1 - kappa^2) V_i.
// Parameter points are (logit kappa, log tau).

#include <cmath>
#include <numbers>
#include <vector>

#include "sbim/rng.hpp"
#include "sbim/types.hpp"

namespace sbim::models {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct StoVolModel {
  int n = 500;
  double t_dof = 5.0;

  static ParamPoint to_unconstrained(double kappa, double tau) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("stochastic volatility: kappa must lie in (0, 1)");
    if (!(tau > 0.0)) throw DomainError("stochastic volatility: tau must be positive");
    ParamPoint th(2);
    th << logit(kappa), std::log(tau);
    return th;
  }
};

/// Particle-filter view. The state is the scalar log-volatility s_i.
struct StoVolPomp {
  StoVolModel model;

  using State = double;
  struct Params {
    double kappa = 0.0;
    double tau = 1.0;
    double innov_sd = 1.0;
    double t_const = 0.0;
    double t_dof = 5.0;
  };

  explicit StoVolPomp(StoVolModel m = {}) : model(m) {}

  /// theta = (logit kappa, log tau).
  Params params(const ParamPoint& theta) const {
    if (theta.size() != 2) throw DomainError("stochastic volatility: parameter point must be (logit kappa, log tau)");
    if (!theta.allFinite()) throw DomainError("stochastic volatility: non-finite parameter");
    Params p;
    p.kappa = expit(theta(0));
    p.tau = std::exp(theta(1));
    p.innov_sd = p.tau * std::sqrt(1.0 - p.kappa * p.kappa);
    p.t_dof = model.t_dof;
    const double nu = model.t_dof;
    p.t_const = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
    return p;
  }

  State init_state(const Params& p, Rng& rng) const { return p.tau * rng.normal(); }

  State step_state(const State& s, int, const Params& p, Rng& rng) const {
    return p.kappa * s + p.innov_sd * rng.normal();
  }

  double meas_logdensity(const Vector& y, const State& s, int, const Params& p) const {
    const double z = y(0) * std::exp(-s);
    return p.t_const - 0.5 * (p.t_dof + 1.0) * std::log1p(z * z / p.t_dof) - s;
  }
};

/// Returns r_1..r_n as one-element vectors.
inline std::vector<Vector> stovol_simulate(const StoVolModel& model, const ParamPoint& theta, Rng& rng) {
  const StoVolPomp pomp(model);
  const auto p = pomp.params(theta);
  std::student_t_distribution<double> tdist(model.t_dof);
  std::vector<Vector> r;
  r.reserve(model.n);
  double s = pomp.init_state(p, rng);
  for (int i = 0; i < model.n; ++i) {
    if (i > 0) s = pomp.step_state(s, i, p, rng);
    r.push_back(Vector::Constant(1, std::exp(s) * tdist(rng)));
  }
  return r;
}

inline StoVolPomp stovol_as_pomp(const StoVolModel& model = {}) { return StoVolPomp(model); }

}  // namespace sbim::models
