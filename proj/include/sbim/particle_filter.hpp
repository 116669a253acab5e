#pragma once

// Bootstrap particle filter for partially observed Markov processes.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>
#include <vector>

#include "sbim/rng.hpp"
#include "sbim/types.hpp"

namespace sbim {

/// Simulator-only model interface. `params` converts a parameter point into
/// whatever per-run constants the model needs; the remaining calls draw the
/// initial latent state, step the latent chain to time i, and evaluate the
/// measurement log-density of observation y at time i.
template <class M>
concept PompModel = requires(const M& m, const ParamPoint& theta, const typename M::Params& p,
                             const typename M::State& x, const Vector& y, int i, Rng& rng) {
  typename M::State;
  typename M::Params;
  { m.params(theta) } -> std::convertible_to<typename M::Params>;
  { m.init_state(p, rng) } -> std::convertible_to<typename M::State>;
  { m.step_state(x, i, p, rng) } -> std::convertible_to<typename M::State>;
  { m.meas_logdensity(y, x, i, p) } -> std::convertible_to<double>;
};

struct PFResult {
  Vector cond_loglik;
  double total_loglik = 0.0;
  int n_particles = 0;
  std::optional<int> degenerate_at;
};

/// log((1/J) sum exp(v_j)), shifted by the maximum.
inline double logmeanexp(const Vector& values) {
  if (values.size() == 0) throw DomainError("logmeanexp: empty input");
  const double m = values.maxCoeff();
  if (std::isinf(m)) return m;
  return m + std::log((values.array() - m).exp().sum() / static_cast<double>(values.size()));
}

namespace detail {

// Draws J categorical indices from cumulative weights; one uniform per draw, in index order.
inline void resample_from_cumulative(const std::vector<double>& cum, std::vector<int>& idx, Rng& rng) {
  const int J = static_cast<int>(idx.size());
  const double total = cum.back();
  const int last = static_cast<int>(cum.size()) - 1;
  for (int j = 0; j < J; ++j) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    idx[j] = std::min(static_cast<int>(it - cum.begin()), last);
  }
}

}  // namespace detail

/// J iid draws from Categorical(weights).
inline std::vector<int> multinomial_resample(const Vector& weights, Rng& rng) {
  if (weights.size() == 0) throw DomainError("resample: empty weight vector");
  if (!weights.allFinite() || weights.minCoeff() < 0.0) throw DomainError("resample: weights must be finite and nonnegative");
  if (std::fabs(weights.sum() - 1.0) > 1e-12) throw DomainError("resample: weights must sum to 1");
  std::vector<double> cum(weights.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < weights.size(); ++j) cum[j] = (acc += weights(j));
  std::vector<int> idx(weights.size());
  detail::resample_from_cumulative(cum, idx, rng);
  return idx;
}

/// Runs the filter with J particles, resampling multinomially at every step.
/// A step at which every particle has zero measurement density ends the run:
/// that entry is -inf, later entries are NaN and total_loglik is -inf.
template <PompModel Model>
PFResult bpf_run(const Model& model, const std::vector<Vector>& y, const ParamPoint& theta, int J, Rng& rng) {
  if (J < 1) throw DomainError("particle filter: need at least one particle");
  if (y.empty()) throw DomainError("particle filter: no observations");
  using State = typename Model::State;
  const auto par = model.params(theta);
  const int n = static_cast<int>(y.size());

  PFResult res;
  res.n_particles = J;
  res.cond_loglik = Vector::Constant(n, kNaN);

  std::vector<State> x;
  std::vector<State> x_next;
  x.reserve(J);
  x_next.reserve(J);
  for (int j = 0; j < J; ++j) x.push_back(model.init_state(par, rng));

  Vector logw(J);
  std::vector<double> cum(J);
  std::vector<int> idx(J);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      x_next.clear();
      for (int j = 0; j < J; ++j) x_next.push_back(model.step_state(x[idx[j]], i, par, rng));
      std::swap(x, x_next);
    }
    for (int j = 0; j < J; ++j) logw(j) = model.meas_logdensity(y[i], x[j], i, par);
    const double mx = logw.maxCoeff();
    if (!(mx > -kInf)) {
      res.cond_loglik(i) = -kInf;
      res.degenerate_at = i;
      res.total_loglik = -kInf;
      return res;
    }
    double acc = 0.0;
    for (int j = 0; j < J; ++j) cum[j] = (acc += std::exp(logw(j) - mx));
    const double li = mx + std::log(acc / J);
    res.cond_loglik(i) = li;
    total += li;
    if (i + 1 < n) detail::resample_from_cumulative(cum, idx, rng);
  }
  res.total_loglik = total;
  return res;
}

}  // namespace sbim
