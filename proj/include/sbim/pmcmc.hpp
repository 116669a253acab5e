#pragma once

// Pseudo-marginal Metropolis-Hastings with a Gaussian random-walk proposal,
// and the replicate-based effective sample size used to compare it with the
// metamodel estimator.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sbim/rng.hpp"
#include "sbim/types.hpp"

namespace sbim {

struct PmcmcChain {
  std::vector<ParamPoint> states;
  /// Simulated log-likelihood attached to each state; a rejected proposal
  /// leaves the incumbent's value in place.
  std::vector<double> logliks;
  std::vector<bool> accepts;
  int burn_in = 100;

  int length() const { return static_cast<int>(states.size()); }
  int n_accepted() const { return static_cast<int>(std::count(accepts.begin(), accepts.end(), true)); }
};

/// Chain of length M: states[0] = init and M - 1 proposals.
/// `sim_loglik(theta, rng)` returns a fresh simulated log-likelihood and
/// `log_prior(theta)` the log prior density (may be -inf).
template <class SimFn, class PriorFn>
PmcmcChain pmcmc_run(SimFn&& sim_loglik, PriorFn&& log_prior, const Vector& proposal_sd, const ParamPoint& init,
                     int M, Rng& rng, int burn_in = 100) {
  if (M < 1) throw DomainError("pmcmc: chain length must be at least 1");
  if (proposal_sd.size() != init.size()) throw DomainError("pmcmc: proposal sd dimension mismatch");
  if (!(proposal_sd.minCoeff() > 0.0)) throw DomainError("pmcmc: proposal sd must be positive");
  PmcmcChain chain;
  chain.burn_in = burn_in;
  chain.states.reserve(M);
  chain.logliks.reserve(M);
  chain.accepts.reserve(M);

  ParamPoint cur = init;
  double cur_prior = log_prior(cur);
  double cur_ll = sim_loglik(cur, rng);
  if (!std::isfinite(cur_ll) || !std::isfinite(cur_prior))
    throw DomainError("pmcmc: initial state has non-finite log-likelihood or prior");
  chain.states.push_back(cur);
  chain.logliks.push_back(cur_ll);
  chain.accepts.push_back(true);

  const int d = static_cast<int>(init.size());
  ParamPoint prop(d);
  for (int m = 1; m < M; ++m) {
    for (int k = 0; k < d; ++k) prop(k) = cur(k) + proposal_sd(k) * rng.normal();
    const double prop_prior = log_prior(prop);
    bool accept = false;
    if (prop_prior > -kInf) {
      const double prop_ll = sim_loglik(prop, rng);
      const double log_ratio = (prop_prior + prop_ll) - (cur_prior + cur_ll);
      if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
        accept = true;
        cur = prop;
        cur_prior = prop_prior;
        cur_ll = prop_ll;
      }
    }
    chain.states.push_back(cur);
    chain.logliks.push_back(cur_ll);
    chain.accepts.push_back(accept);
  }
  return chain;
}

/// Posterior variance over estimator variance.
inline double ess(double estimator_variance, double posterior_variance) {
  if (!(estimator_variance > 0.0) || !(posterior_variance > 0.0)) throw DomainError("ess: variances must be positive");
  return posterior_variance / estimator_variance;
}

/// Means of the first c post-burn-in states for each checkpoint c.
inline std::vector<ParamPoint> running_estimates(const PmcmcChain& chain, const std::vector<int>& checkpoints) {
  std::vector<ParamPoint> out;
  out.reserve(checkpoints.size());
  const int avail = chain.length() - chain.burn_in;
  for (int c : checkpoints) {
    if (c < 1) throw DomainError("running_estimates: checkpoint " + std::to_string(c) + " falls inside the burn-in");
    if (c > avail)
      throw DomainError("running_estimates: checkpoint " + std::to_string(c) + " exceeds the " +
                        std::to_string(avail) + " post-burn-in states");
  }
  std::vector<int> order(checkpoints.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  out.assign(checkpoints.size(), ParamPoint());
  std::sort(order.begin(), order.end(), [&](int a, int b) { return checkpoints[a] < checkpoints[b]; });
  ParamPoint sum = ParamPoint::Zero(chain.states.front().size());
  int used = 0;
  for (int o : order) {
    for (; used < checkpoints[o]; ++used) sum += chain.states[chain.burn_in + used];
    out[o] = sum / static_cast<double>(checkpoints[o]);
  }
  return out;
}

/// Equal-tailed interval for coordinate k from post-burn-in states
/// burn_in .. burn_in + count - 1 (count <= 0 uses all of them).
inline std::pair<double, double> credible_interval(const PmcmcChain& chain, double level, int k = 0, int count = 0) {
  const int avail = chain.length() - chain.burn_in;
  if (avail < 2) throw DomainError("credible_interval: too few post-burn-in states");
  if (count <= 0 || count > avail) count = avail;
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = chain.states[chain.burn_in + i](k);
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * (count - 1);
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, count - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
  };
  const double tail = 0.5 * (1.0 - level);
  return {q(tail), q(1.0 - tail)};
}

/// Fraction of transitions that left the state unchanged.
inline double stuck_fraction(const PmcmcChain& chain) {
  if (chain.length() < 2) return 0.0;
  int stuck = 0;
  for (int m = 1; m < chain.length(); ++m) stuck += chain.accepts[m] ? 0 : 1;
  return static_cast<double>(stuck) / (chain.length() - 1);
}

/// Length of the longest run of identical consecutive states, as a fraction of the chain.
inline double longest_flat_fraction(const PmcmcChain& chain) {
  int best = 1;
  int run = 1;
  for (int m = 1; m < chain.length(); ++m) {
    run = chain.accepts[m] ? 1 : run + 1;
    best = std::max(best, run);
  }
  return static_cast<double>(best) / chain.length();
}

}  // namespace sbim
