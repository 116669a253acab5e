// Linear Gaussian state space model: particle-filter log-likelihoods on a
// grid, quadratic fit, MESLE confidence interval, and the Kalman MLE for
// comparison.

#include <cstdio>

#include "sbim/sbim.hpp"

using namespace sbim;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 1;
  const auto model = models::LgssModel::standard(2);
  const double theta_true = 0.2;
  Rng data_rng(derive_seed(seed, 0));
  const auto y = models::lgss_simulate(model, theta_true, 100, data_rng);
  const auto pomp = models::lgss_as_pomp(model);

  const int M = 60, J = 200;
  SimLogLikTable t;
  t.n_obs = static_cast<int>(y.size());
  t.points.resize(M, 1);
  t.values.resize(M);
  t.weights = Vector::Constant(M, J);
  parallel_for(M, default_threads(), [&](int m) {
    Rng rng(derive_seed(seed, 1, m));
    const double th = -0.4 + 0.8 * m / (M - 1);
    t.points(m, 0) = th;
    t.values(m) = bpf_run(pomp, y, ParamPoint::Constant(1, th), J, rng).total_loglik;
  });

  const MetaFit fit = fit_quadratic(t);
  const ConfidenceSet ci = mesle_ci_1d(fit, 0.05);

  double best = -1.0, best_ll = -kInf;
  for (int i = 0; i <= 800; ++i) {
    const double th = -0.4 + 0.001 * i;
    const double ll = models::kalman_loglik(model, y, th);
    if (ll > best_ll) best_ll = ll, best = th;
  }
  std::printf("true theta          %.3f\n", theta_true);
  std::printf("Kalman MLE (grid)   %.3f\n", best);
  std::printf("metamodel MESLE     %.3f\n", mesle_point(fit)(0));
  std::printf("sigma^2 estimate    %.3f\n", fit.sigma2);
  if (ci.kind == ConfidenceSet::Kind::interval)
    std::printf("95%% MESLE CI        [%.3f, %.3f]\n", ci.bounds[0], ci.bounds[1]);
  else
    std::printf("95%% MESLE set       %s\n", to_string(ci.kind).c_str());
  return 0;
}
