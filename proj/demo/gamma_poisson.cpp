// Gamma-Poisson example: simulated log-likelihoods on a grid around the
// truth, quadratic fit, block estimate of K1 and a proxy confidence interval.

#include <cstdio>

#include "sbim/sbim.hpp"

using namespace sbim;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 1;
  const models::GammaPoissonModel model{1.0, 1000};
  Rng data_rng(derive_seed(seed, 0));
  const models::GpData data(models::gp_simulate_data(model, 1.0, data_rng));

  const int M = 401;
  const BlockPartition part = default_blocks(model.n);
  SimLogLikTable t;
  t.n_obs = model.n;
  t.points.resize(M, 1);
  t.values.resize(M);
  t.weights = Vector::Ones(M);
  t.per_block_values = Matrix(M, part.K());
  for (int m = 0; m < M; ++m) {
    Rng rng(derive_seed(seed, 1, m));
    const double lambda = 1.0 + 0.001 * (m - 200);
    const auto s = models::gp_simulate_loglik(model, data, lambda, rng);
    t.points(m, 0) = lambda;
    t.values(m) = s.total;
    t.per_block_values->row(m) = block_sums(s.per_obs, part).transpose();
  }

  const MetaFit fit = fit_quadratic(t);
  const K1Estimate k1 = estimate_k1(t, part);
  const ProxyFit pf = proxy_fit(t, k1.matrix, fit.sigma2);
  const ConfidenceSet ci = proxy_ci_1d(pf, 0.05);

  std::printf("exact MLE           %.5f\n", models::gp_mesle(model, data.y));
  std::printf("metamodel MESLE     %.5f\n", mesle_point(fit)(0));
  std::printf("K1 estimate         %.4f  (%d blocks)\n", k1.matrix(0, 0), part.K());
  std::printf("-2 c / n            %.4f\n", -2.0 * pf.c_hat(0, 0) / model.n);
  if (ci.kind == ConfidenceSet::Kind::interval)
    std::printf("95%% CI              [%.5f, %.5f]\n", ci.bounds[0], ci.bounds[1]);
  else if (ci.kind == ConfidenceSet::Kind::complement_of_interval)
    std::printf("95%% set             outside (%.5f, %.5f)\n", ci.bounds[0], ci.bounds[1]);
  else
    std::printf("95%% set             %s\n", to_string(ci.kind).c_str());
  const TestResult r = proxy_ht(pf, ParamPoint::Constant(1, 1.0));
  std::printf("test lambda = 1     F = %.4f, p = %.4f\n", r.statistic, r.p_value);
  return 0;
}
