#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sbim/models/gauss_location.hpp"
#include "sbim/pmcmc.hpp"

using namespace sbim;
using namespace sbim::models;

namespace {

double flat_prior(const ParamPoint&) { return 0.0; }

// Means of consecutive batches, for autocorrelation-robust standard errors.
std::vector<double> batch_means(const std::vector<double>& v, int batches) {
  const std::size_t size = v.size() / batches;
  std::vector<double> out;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) s += v[i];
    out.push_back(s / size);
  }
  return out;
}

PmcmcChain constant_chain(double value, int M) {
  PmcmcChain c;
  for (int m = 0; m < M; ++m) {
    c.states.push_back(ParamPoint::Constant(1, value));
    c.logliks.push_back(0.0);
    c.accepts.push_back(m == 0);
  }
  return c;
}

}  // namespace

TEST(Pmcmc, EqualLikelihoodsAlwaysAccept) {
  Rng rng(1);
  const auto chain = pmcmc_run([](const ParamPoint&, Rng&) { return -3.0; }, flat_prior, Vector::Ones(1),
                               ParamPoint::Zero(1), 500, rng);
  EXPECT_EQ(chain.length(), 500);
  EXPECT_EQ(chain.n_accepted(), 500);
  EXPECT_EQ(stuck_fraction(chain), 0.0);
}

TEST(Pmcmc, IncumbentEstimateIsRecycled) {
  Rng rng(2);
  int calls = 0;
  auto noisy = [&](const ParamPoint& th, Rng& r) {
    ++calls;
    return -0.5 * th.squaredNorm() + 2.0 * r.normal();
  };
  const auto chain = pmcmc_run(noisy, flat_prior, Vector::Constant(2, 1.5), ParamPoint::Zero(2), 2000, rng);
  EXPECT_EQ(calls, 2000);
  for (int m = 1; m < chain.length(); ++m) {
    if (!chain.accepts[m]) {
      EXPECT_EQ(chain.logliks[m], chain.logliks[m - 1]);
      EXPECT_EQ(chain.states[m], chain.states[m - 1]);
    }
  }
  EXPECT_GT(chain.n_accepted(), 100);
  EXPECT_LT(chain.n_accepted(), 2000);
}

TEST(Pmcmc, ZeroPriorSkipsSimulation) {
  Rng rng(3);
  int calls = 0;
  auto sim = [&](const ParamPoint&, Rng&) {
    ++calls;
    return 0.0;
  };
  auto prior = [](const ParamPoint& th) { return th(0) >= 0.0 ? 0.0 : -kInf; };
  const auto chain = pmcmc_run(sim, prior, Vector::Ones(1), ParamPoint::Constant(1, 0.5), 1000, rng);
  for (const auto& s : chain.states) EXPECT_GE(s(0), 0.0);
  EXPECT_EQ(calls, chain.n_accepted());
}

TEST(Pmcmc, Reproducible) {
  auto sim = [](const ParamPoint& th, Rng& r) { return -th.squaredNorm() + r.normal(); };
  Rng a(4), b(4);
  const auto c1 = pmcmc_run(sim, flat_prior, Vector::Ones(1), ParamPoint::Zero(1), 300, a);
  const auto c2 = pmcmc_run(sim, flat_prior, Vector::Ones(1), ParamPoint::Zero(1), 300, b);
  EXPECT_EQ(c1.states, c2.states);
  EXPECT_EQ(c1.logliks, c2.logliks);
}

TEST(Pmcmc, Errors) {
  Rng rng(5);
  auto sim = [](const ParamPoint&, Rng&) { return -kInf; };
  EXPECT_THROW(pmcmc_run(sim, flat_prior, Vector::Ones(1), ParamPoint::Zero(1), 10, rng), DomainError);
  auto ok = [](const ParamPoint&, Rng&) { return 0.0; };
  EXPECT_THROW(pmcmc_run(ok, flat_prior, Vector::Ones(1), ParamPoint::Zero(1), 0, rng), DomainError);
  EXPECT_THROW(pmcmc_run(ok, flat_prior, Vector::Ones(2), ParamPoint::Zero(1), 10, rng), DomainError);
}

TEST(Pmcmc, ExactLikelihoodMatchesPosterior) {
  const GaussLocationModel gl{30.0};
  Rng rng(6);
  const GlData data(gl_simulate_data(gl, 0.0, 200, rng));
  auto exact = [&](const ParamPoint& th, Rng&) { return gl_exact_loglik(gl, data, th(0)); };
  const auto chain = pmcmc_run(exact, flat_prior, Vector::Constant(1, 3.0), ParamPoint::Constant(1, data.mean),
                               100000, rng);
  std::vector<double> x, sq;
  for (int m = chain.burn_in; m < chain.length(); ++m) x.push_back(chain.states[m](0));
  const double post_var = gl_posterior_variance(gl, 200);
  for (double v : x) sq.push_back((v - data.mean) * (v - data.mean));
  const auto bm = batch_means(x, 100);
  const auto bv = batch_means(sq, 100);
  EXPECT_NEAR(oracle::mean(bm), data.mean, 3.0 * oracle::std_error(bm));
  EXPECT_NEAR(oracle::mean(bv), post_var, 3.0 * oracle::std_error(bv));
}

TEST(Pmcmc, NoisyChainStaysFlat) {
  const GaussLocationModel gl{30.0};
  Rng rng(7);
  const GlData data(gl_simulate_data(gl, 0.0, 200, rng));
  auto sim = [&](const ParamPoint& th, Rng& r) { return gl_simulate_loglik(gl, data, th(0), r); };
  std::vector<double> early, late, stuck;
  for (int c = 0; c < 50; ++c) {
    Rng crng(derive_seed(7, 1, 0, c));
    const ParamPoint init =
        ParamPoint::Constant(1, data.mean + std::sqrt(gl_posterior_variance(gl, 200)) * crng.normal());
    const auto chain = pmcmc_run(sim, flat_prior, Vector::Constant(1, 3.0), init, 100000, crng);
    int acc1000 = 0;
    for (int m = 1; m < 1000; ++m) acc1000 += chain.accepts[m];
    early.push_back(acc1000);
    late.push_back(chain.n_accepted() - 1);
    stuck.push_back(stuck_fraction(chain));
  }
  EXPECT_LT(oracle::mean(late) / oracle::mean(early), 3.0);
  EXPECT_GT(oracle::mean(stuck), 0.9);
}

TEST(Ess, Basics) {
  EXPECT_EQ(ess(0.5, 1.0), 2.0);
  EXPECT_THROW(ess(0.0, 1.0), DomainError);
  EXPECT_THROW(ess(1.0, -1.0), DomainError);
}

TEST(RunningEstimates, ConstantChain) {
  const PmcmcChain c = constant_chain(2.5, 1100);
  const auto est = running_estimates(c, {100, 1000, 10});
  ASSERT_EQ(est.size(), 3u);
  for (const auto& e : est) EXPECT_EQ(e(0), 2.5);
  EXPECT_THROW(running_estimates(c, {0}), DomainError);
  EXPECT_THROW(running_estimates(c, {1001}), DomainError);
}

TEST(RunningEstimates, MeansAfterBurnIn) {
  PmcmcChain c;
  for (int m = 0; m < 110; ++m) {
    c.states.push_back(ParamPoint::Constant(1, m));
    c.logliks.push_back(0.0);
    c.accepts.push_back(true);
  }
  const auto est = running_estimates(c, {1, 4});
  EXPECT_EQ(est[0](0), 100.0);
  EXPECT_EQ(est[1](0), 101.5);
}

TEST(CredibleInterval, Quantiles) {
  PmcmcChain c;
  c.burn_in = 0;
  for (int m = 0; m <= 100; ++m) {
    c.states.push_back(ParamPoint::Constant(1, m));
    c.logliks.push_back(0.0);
    c.accepts.push_back(true);
  }
  const auto [lo, hi] = credible_interval(c, 0.9);
  EXPECT_NEAR(lo, 5.0, 1e-12);
  EXPECT_NEAR(hi, 95.0, 1e-12);
  const auto [lo2, hi2] = credible_interval(c, 0.5, 0, 11);
  EXPECT_NEAR(lo2, 2.5, 1e-12);
  EXPECT_NEAR(hi2, 7.5, 1e-12);
}

TEST(FlatFraction, LongestRun) {
  PmcmcChain c = constant_chain(1.0, 10);
  c.accepts[4] = true;
  EXPECT_NEAR(longest_flat_fraction(c), 0.6, 1e-15);
  EXPECT_NEAR(stuck_fraction(c), 8.0 / 9.0, 1e-15);
}
