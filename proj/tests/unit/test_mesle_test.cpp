#include <gtest/gtest.h>

#include <boost/math/distributions/fisher_f.hpp>

#include "oracles.hpp"
#include "sbim/mesle_test.hpp"
#include "sbim/metamodel.hpp"
#include "synth.hpp"

using namespace sbim;

namespace {

const Vector kA1 = (Vector(3) << 0.0, 1.0, -1.0).finished();  // maximizer at 0.5

std::vector<double> null_statistics(int M, int reps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out;
  for (int r = 0; r < reps; ++r) {
    const SimLogLikTable t = synth::conditional_table(M, 1, kA1, 1.0, rng);
    out.push_back(mesle_ht(fit_quadratic(t), ParamPoint::Constant(1, 0.5)).statistic);
  }
  return out;
}

double f_ks(const std::vector<double>& stats, double d1, double d2) {
  boost::math::fisher_f ref(d1, d2);
  return oracle::ks_pvalue(stats, [&](double x) { return x <= 0 ? 0.0 : boost::math::cdf(ref, x); });
}

std::vector<ParamPoint> grid_1d(double lo, double hi, int n) {
  std::vector<ParamPoint> g;
  for (int i = 0; i < n; ++i) g.push_back(ParamPoint::Constant(1, lo + (hi - lo) * i / (n - 1)));
  return g;
}

}  // namespace

TEST(MesleTest, AtMaximizerStatisticIsZero) {
  Rng rng(1);
  for (int d = 1; d <= 3; ++d) {
    Vector A = synth::random_vector(quad_dim(d), rng);
    A.tail(vech_dim(d)) = vech(Matrix(-Matrix::Identity(d, d)));
    const MetaFit f = fit_quadratic(synth::conditional_table(60, d, A, 0.5, rng));
    const TestResult r = mesle_ht(f, mesle_point(f));
    EXPECT_NEAR(r.statistic, 0.0, 1e-12);
    EXPECT_NEAR(r.p_value, 1.0, 1e-12);
    EXPECT_NEAR(r.mllr, 0.0, 1e-10);
    EXPECT_EQ(r.df1, d);
    EXPECT_EQ(r.df2, 60 - quad_dim(d));
  }
}

TEST(MesleTest, XiNonnegativeAndZeroOnlyAtMaximizer) {
  Rng rng(2);
  const MetaFit f = fit_quadratic(synth::conditional_table(40, 2, (Vector(6) << 0, 1, -1, -1, 0.2, -2).finished(), 0.3, rng));
  const ParamPoint th = mesle_point(f);
  for (int i = 0; i < 100; ++i) {
    const ParamPoint p = th + 0.5 * synth::random_vector(2, rng);
    EXPECT_GT(mesle_xi(f, p), 0.0);
  }
  EXPECT_LT(mesle_xi(f, th), 1e-20);
}

TEST(MesleTest, MllrMatchesStatistic) {
  Rng rng(3);
  const MetaFit f = fit_quadratic(synth::conditional_table(50, 1, kA1, 1.0, rng));
  const ParamPoint th0 = ParamPoint::Constant(1, 0.9);
  const TestResult r = mesle_ht(f, th0);
  const double xi = mesle_xi(f, th0);
  EXPECT_NEAR(r.statistic, (50.0 - 3.0) * xi / (50.0 * f.sigma2), 1e-12 * r.statistic);
  EXPECT_NEAR(r.mllr, -25.0 * std::log(xi / (50.0 * f.sigma2) + 1.0), 1e-10);
  EXPECT_NEAR(r.p_value, boost::math::cdf(boost::math::complement(boost::math::fisher_f(1, 47), r.statistic)), 1e-12);
}

// xi is the Wald form of the slope at the null: compare with an explicit
// covariance built from the inverse of the full information matrix.
TEST(MesleTest, XiMatchesExplicitSlopeCovariance) {
  Rng rng(4);
  const MetaFit f = fit_quadratic(synth::conditional_table(30, 2, (Vector(6) << 1, 0, 0, -1, 0.3, -1).finished(), 0.2, rng));
  const ParamPoint th = (Vector(2) << 0.7, -0.4).finished();
  Matrix G = Matrix::Zero(2, 6);
  G(0, 1) = 1;
  G(1, 2) = 1;
  G(0, 3) = 2 * th(0);
  G(0, 4) = 2 * th(1);
  G(1, 4) = 2 * th(0);
  G(1, 5) = 2 * th(1);
  const Matrix cov = G * f.info.inverse() * G.transpose();
  const Vector s = f.b + 2 * f.c * th;
  EXPECT_NEAR(mesle_xi(f, th), s.dot(cov.inverse() * s), 1e-9 * s.squaredNorm());
}

TEST(MesleTest, NullLawIsExactAtSmallM) {
  EXPECT_GT(f_ks(null_statistics(20, 2000, 11), 1, 17), 0.01);
}

TEST(MesleTest, NullLawAtLargeM) {
  EXPECT_GT(f_ks(null_statistics(401, 2000, 12), 1, 398), 0.01);
}

TEST(MesleTest, NullLawTwoDimensional) {
  Rng rng(13);
  const Vector A = (Vector(6) << 0, 1, -1, -1, 0.2, -2).finished();
  MetaFit truth;
  truth.a = 0;
  truth.b = A.segment(1, 2);
  truth.c = unvech(A.tail(3));
  truth.d = 2;
  const ParamPoint th0 = mesle_point(truth);
  std::vector<double> stats;
  for (int r = 0; r < 1000; ++r)
    stats.push_back(mesle_ht(fit_quadratic(synth::conditional_table(25, 2, A, 1.0, rng)), th0).statistic);
  EXPECT_GT(f_ks(stats, 2, 19), 0.01);
}

TEST(MesleTest, ConstantShiftInvariance) {
  Rng rng(5);
  SimLogLikTable t = synth::conditional_table(40, 2, (Vector(6) << 0, 1, -1, -1, 0.2, -2).finished(), 0.4, rng);
  const ParamPoint th0 = (Vector(2) << 0.2, 0.1).finished();
  const TestResult r1 = mesle_ht(fit_quadratic(t), th0);
  t.values.array() += 1234.5;
  const TestResult r2 = mesle_ht(fit_quadratic(t), th0);
  EXPECT_NEAR(r1.statistic, r2.statistic, 1e-9 * std::max(1.0, r1.statistic));
  EXPECT_NEAR(r1.p_value, r2.p_value, 1e-9);
}

TEST(MesleTest, DegenerateDesign) {
  MetaFit f;
  f.d = 1;
  f.M = 10;
  f.b = Vector::Constant(1, 1.0);
  f.c = Matrix::Constant(1, 1, -1.0);
  f.sigma2 = 1.0;
  f.info = Matrix::Zero(3, 3);
  f.info(0, 0) = 10.0;
  EXPECT_THROW(mesle_ht(f, ParamPoint::Constant(1, 0.0)), DegenerateDesignError);
  f.info(0, 0) = 0.0;
  EXPECT_THROW(mesle_ht(f, ParamPoint::Constant(1, 0.0)), DegenerateDesignError);
}

TEST(MesleTest, DimensionErrors) {
  Rng rng(6);
  const MetaFit f = fit_quadratic(synth::conditional_table(20, 1, kA1, 1.0, rng));
  EXPECT_THROW(mesle_ht(f, ParamPoint::Zero(2)), DomainError);
  const MetaFit f2 = fit_quadratic(synth::conditional_table(20, 2, Vector::Zero(6), 1.0, rng));
  EXPECT_THROW(mesle_ci_1d(f2, 0.05), DomainError);
  EXPECT_THROW(mesle_confregion(f, 0.05, {}), DomainError);
  EXPECT_THROW(mesle_ci_1d(f, 1.5), DomainError);
}

TEST(MesleCi, DualityOnGrid) {
  Rng rng(7);
  for (double sigma2 : {0.01, 1.0, 30.0}) {
    const MetaFit f = fit_quadratic(synth::conditional_table(40, 1, kA1, sigma2, rng));
    for (double alpha : {0.05, 0.1, 0.2}) {
      const ConfidenceSet ci = mesle_ci_1d(f, alpha);
      for (const auto& th : grid_1d(-5, 5, 200)) {
        const double p = mesle_ht(f, th).p_value;
        // points within rounding of the boundary are skipped
        if (std::fabs(p - alpha) < 1e-9) continue;
        EXPECT_EQ(ci.contains(th(0)), p >= alpha) << "sigma2=" << sigma2 << " theta=" << th(0) << " p=" << p;
      }
    }
  }
}

TEST(MesleCi, StrongSignalGivesIntervalAroundMaximizer) {
  Rng rng(8);
  const MetaFit f = fit_quadratic(synth::conditional_table(40, 1, kA1, 0.01, rng));
  const ConfidenceSet ci = mesle_ci_1d(f, 0.05);
  ASSERT_EQ(ci.kind, ConfidenceSet::Kind::interval);
  ASSERT_EQ(ci.bounds.size(), 2u);
  EXPECT_LT(ci.bounds[0], ci.bounds[1]);
  EXPECT_TRUE(ci.contains(mesle_point(f)(0)));
  EXPECT_DOUBLE_EQ(ci.level, 0.95);
}

TEST(MesleCi, WeakSignalGivesUnboundedSet) {
  Rng rng(9);
  const Vector flat = (Vector(3) << 0.0, 0.01, -0.001).finished();
  int unbounded = 0;
  for (int r = 0; r < 20; ++r) {
    const MetaFit f = fit_quadratic(synth::conditional_table(20, 1, flat, 100.0, rng));
    const ConfidenceSet ci = mesle_ci_1d(f, 0.05);
    if (ci.kind == ConfidenceSet::Kind::complement_of_interval || ci.kind == ConfidenceSet::Kind::full_line ||
        (ci.kind == ConfidenceSet::Kind::interval && std::isinf(ci.bounds[0] + ci.bounds[1])))
      ++unbounded;
  }
  EXPECT_GE(unbounded, 15);
}

TEST(MesleRegion, ContainsMaximizerAndIsMonotone) {
  Rng rng(10);
  const MetaFit f = fit_quadratic(synth::conditional_table(50, 2, (Vector(6) << 0, 1, -1, -1, 0.2, -2).finished(), 2.0, rng));
  std::vector<ParamPoint> grid{mesle_point(f)};
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 21; ++j) grid.push_back((Vector(2) << -2 + 0.2 * i, -2 + 0.2 * j).finished());
  const auto r05 = mesle_confregion(f, 0.05, grid);
  const auto r10 = mesle_confregion(f, 0.10, grid);
  EXPECT_TRUE(r05[0].inside);
  EXPECT_TRUE(mesle_confregion(f, 0.999, grid)[0].inside);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (r10[i].inside) EXPECT_TRUE(r05[i].inside);
    EXPECT_EQ(r05[i].point, grid[i]);
  }
}

TEST(QuadraticSet, Classification) {
  auto s = quadratic_sublevel_set(1, 0, -1, 0.95);  // x^2 - 1 <= 0
  EXPECT_EQ(s.kind, ConfidenceSet::Kind::interval);
  EXPECT_NEAR(s.bounds[0], -1, 1e-15);
  EXPECT_NEAR(s.bounds[1], 1, 1e-15);
  s = quadratic_sublevel_set(-1, 0, 1, 0.95);  // 1 - x^2 <= 0
  EXPECT_EQ(s.kind, ConfidenceSet::Kind::complement_of_interval);
  EXPECT_TRUE(s.contains(2));
  EXPECT_FALSE(s.contains(0));
  EXPECT_EQ(quadratic_sublevel_set(-1, 0, -1, 0.9).kind, ConfidenceSet::Kind::full_line);
  EXPECT_EQ(quadratic_sublevel_set(1, 0, 1, 0.9).kind, ConfidenceSet::Kind::empty);
  EXPECT_EQ(quadratic_sublevel_set(1, -2, 1, 0.9).kind, ConfidenceSet::Kind::empty);
  s = quadratic_sublevel_set(0, 2, -4, 0.9);  // 2x - 4 <= 0
  EXPECT_EQ(s.kind, ConfidenceSet::Kind::interval);
  EXPECT_EQ(s.bounds[0], -kInf);
  EXPECT_NEAR(s.bounds[1], 2, 1e-15);
  EXPECT_EQ(quadratic_sublevel_set(0, 0, 1, 0.9).kind, ConfidenceSet::Kind::empty);
  EXPECT_THROW(quadratic_sublevel_set(kNaN, 0, 1, 0.9), DomainError);
}

TEST(QuadraticSet, StableRootsForTinyRoot) {
  const auto s = quadratic_sublevel_set(1, -1e8, 1, 0.9);
  ASSERT_EQ(s.kind, ConfidenceSet::Kind::interval);
  EXPECT_NEAR(s.bounds[0], 1e-8, 1e-22);
  EXPECT_NEAR(s.bounds[1], 1e8, 1e-6);
}
