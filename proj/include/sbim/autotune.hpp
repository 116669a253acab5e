#pragma once

// Weight adjustment against cubic misfit, and selection of the next
// simulation point by minimizing the scaled total variation (STV) of the
// estimated MESLE.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbim/distributions.hpp"
#include "sbim/features.hpp"
#include "sbim/metamodel.hpp"
#include "sbim/optim.hpp"
#include "sbim/types.hpp"

namespace sbim {

/// p-value of the partial F test for all degree-3 monomials in a weighted
/// cubic regression, against the nested quadratic.
inline double cubic_pvalue(const SimLogLikTable& table, const Vector& weights) {
  const int d = table.d();
  const int M = table.M();
  const int q = cubic_monomial_count(d);
  const int full = quad_dim(d) + q;
  if (M <= full)
    throw DomainError("cubic test needs more than " + std::to_string(full) + " simulation points, got " +
                      std::to_string(M));
  if (weights.size() != M) throw DomainError("cubic test: weights length mismatch");
  const WeightedLeastSquares quad(quad_design(table.points), weights);
  const WeightedLeastSquares cubic(cubic_design(table.points), weights);
  const double rss_q = quad.wrss(table.values, quad.solve(table.values));
  const double rss_c = cubic.wrss(table.values, cubic.solve(table.values));
  const double df2 = M - full;
  const double extra = std::max(0.0, rss_q - rss_c);
  // A quadratic fit that is exact up to round-off has no cubic signal to test.
  const double scale = table.values.dot(weights.cwiseProduct(table.values));
  if (rss_q <= 1e-24 * scale) return 1.0;
  if (rss_c <= 1e-300 || rss_c <= 1e-15 * rss_q) return extra <= 1e-12 * std::max(1.0, rss_q) ? 1.0 : 0.0;
  const double F = (extra / q) / (rss_c / df2);
  return dist::f_sf(F, q, df2);
}

struct AdjustResult {
  Vector adjusted_weights;
  double g_final = kInf;
  double p_cubic_final = 1.0;
  int iterations = 0;
  bool converged = false;
  MetaFit fit;           // quadratic refit with the adjusted weights
  ParamPoint theta_hat;  // its maximizer
};

struct AdjustOptions {
  int max_iter = 50;
  double p_low = 0.01;
  double p_high = 0.3;
  double shrink = 1.8;
  double grow = 1.3;
};

/// Discounts weights by exp(-(q2(theta_hat) - q2(theta_m)) / g), tuning g
/// until the cubic term is neither clearly significant nor clearly absent.
/// With g = infinity on the first pass and an insignificant cubic term the
/// weights are left unchanged and the result is reported as converged.
inline AdjustResult adjust_weights(const SimLogLikTable& table, const AdjustOptions& opt = {}) {
  table.validate();
  const int M = table.M();
  const Vector& w = table.weights;

  MetaFit q2 = fit_quadratic(table.points, table.values, w);
  ParamPoint theta_hat = mesle_point(q2);

  AdjustResult res;
  double g = kInf;
  int failures = 0;
  Vector w_adj = w;
  for (int it = 1; it <= opt.max_iter; ++it) {
    res.iterations = it;
    if (std::isinf(g)) {
      w_adj = w;
    } else {
      const double top = q2.eval(theta_hat);
      for (int m = 0; m < M; ++m) w_adj(m) = w(m) * std::exp(-(top - q2.eval(table.point(m))) / g);
    }
    try {
      const MetaFit refit = fit_quadratic(table.points, table.values, w_adj);
      const ParamPoint th = mesle_point(refit);
      q2 = refit;
      theta_hat = th;
      failures = 0;
    } catch (const Error& e) {
      if (++failures >= 3) throw Error(std::string("adjust_weights: repeated refit failure: ") + e.what());
    }
    const double p = cubic_pvalue(table, w_adj);
    res.p_cubic_final = p;
    if (p < opt.p_low) {
      if (std::isinf(g)) {
        double lowest = kInf;
        for (int m = 0; m < M; ++m) lowest = std::min(lowest, q2.eval(table.point(m)));
        g = q2.eval(theta_hat) - lowest;
        if (!(g > 0.0)) throw Error("adjust_weights: fitted quadratic is flat over the design");
      } else {
        g /= opt.shrink;
      }
    } else if (p > opt.p_high) {
      if (std::isinf(g)) {
        res.converged = true;
        break;
      }
      g *= opt.grow;
    } else {
      res.converged = true;
      break;
    }
  }
  res.adjusted_weights = w_adj;
  res.g_final = g;
  res.fit = q2;
  res.theta_hat = theta_hat;
  return res;
}

/// Jacobian of -c^{-1} b / 2 with respect to (a, b, vech c).
inline Matrix mesle_jacobian(const MetaFit& fit) {
  const int d = fit.d;
  const Matrix cinv = fit.c.inverse();
  const Vector cib = cinv * fit.b;
  Matrix J = Matrix::Zero(d, quad_dim(d));
  J.block(0, 1, d, d) = -0.5 * cinv;
  for (int j = 0; j < vech_dim(d); ++j) {
    Vector e = Vector::Zero(vech_dim(d));
    e(j) = 1.0;
    J.col(1 + d + j) = 0.5 * cinv * unvech(e) * cib;
  }
  return J;
}

/// Tr{-c^{-1} J (X' W_adj X + w x x')^{-1} J'} for a candidate point x with weight w.
inline double stv(const SimLogLikTable& table, const Vector& adjusted_weights, const MetaFit& fit,
                  const ParamPoint& candidate, double candidate_weight) {
  if (candidate.size() != fit.d) throw DomainError("stv: candidate dimension mismatch");
  if (adjusted_weights.size() != table.M()) throw DomainError("stv: weights length mismatch");
  if (candidate_weight < 0.0) throw DomainError("stv: candidate weight must be nonnegative");
  if (!(negative_definiteness_margin(fit.c) > 0.0))
    throw NotNegativeDefiniteError("stv: fitted curvature is not negative definite");
  const Matrix X = quad_design(table.points);
  const Vector x = quad_features(candidate);
  Matrix info = X.transpose() * adjusted_weights.asDiagonal() * X + candidate_weight * x * x.transpose();
  info = 0.5 * (info + info.transpose());
  Eigen::LLT<Matrix> llt(info);
  if (llt.info() != Eigen::Success) return kInf;
  const Vector diag = Matrix(llt.matrixL()).diagonal();
  if (diag.minCoeff() < 1e-10 * diag.maxCoeff()) return kInf;
  const Matrix J = mesle_jacobian(fit);
  const Matrix cov = J * llt.solve(J.transpose());
  return (-fit.c.inverse() * cov).trace();
}

struct DesignProposal {
  ParamPoint point;
  double stv = kInf;
  double weight = 0.0;
  int starts_succeeded = 0;
};

struct DesignOptions {
  AdjustOptions adjust;
  BfgsOptions bfgs;
  double search_halfwidths = 3.0;  // search box half-width, in design half-widths
};

/// Weight of a new simulation at theta under the exponential discount rule.
inline double candidate_weight(const AdjustResult& adj, double base_weight, const ParamPoint& theta) {
  if (std::isinf(adj.g_final)) return base_weight;
  return base_weight * std::exp(-(adj.fit.eval(adj.theta_hat) - adj.fit.eval(theta)) / adj.g_final);
}

/// Proposes the next simulation point. Multi-start BFGS from theta_hat and
/// four points offset by +-1.5 design half-widths, inside a box of
/// `search_halfwidths` design half-widths around theta_hat.
inline DesignProposal opt_design(const SimLogLikTable& table, const DesignOptions& opt = {}) {
  const AdjustResult adj = adjust_weights(table, opt.adjust);
  const int d = table.d();
  const double base_weight = table.weights.mean();
  const Vector lo = table.points.colwise().minCoeff().transpose();
  const Vector hi = table.points.colwise().maxCoeff().transpose();
  Vector half = 0.5 * (hi - lo);
  for (int k = 0; k < d; ++k)
    if (!(half(k) > 0.0)) half(k) = 1.0;
  const ParamPoint center = adj.theta_hat;
  const Vector box = opt.search_halfwidths * half;

  // theta = center + box * tanh(u) keeps every iterate inside the box.
  auto to_theta = [&](const Vector& u) { return ParamPoint(center + box.cwiseProduct(u.array().tanh().matrix())); };
  auto objective = [&](const Vector& u) {
    const ParamPoint th = to_theta(u);
    return stv(table, adj.adjusted_weights, adj.fit, th, candidate_weight(adj, base_weight, th));
  };

  std::vector<Vector> starts;
  starts.push_back(Vector::Zero(d));
  const double signs[4][2] = {{1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
  for (int s = 0; s < 4; ++s) {
    Vector off(d);
    for (int k = 0; k < d; ++k) off(k) = signs[s][k % 2] * 1.5 * half(k);
    if (d == 1 && s >= 2) off *= 0.5;  // +- patterns coincide with ++/-- in one dimension
    starts.push_back((off.cwiseQuotient(box)).array().atanh().matrix());
  }

  DesignProposal best;
  for (const auto& u0 : starts) {
    BfgsResult r;
    try {
      r = bfgs_minimize(objective, u0, opt.bfgs);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(r.value)) continue;
    ++best.starts_succeeded;
    if (r.value < best.stv) {
      best.stv = r.value;
      best.point = to_theta(r.x);
    }
  }
  if (best.starts_succeeded == 0) throw Error("opt_design: every optimizer start failed (non-finite STV)");
  best.weight = candidate_weight(adj, base_weight, best.point);
  return best;
}

}  // namespace sbim
