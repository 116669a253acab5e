#pragma once

// Weighted quadratic regression of simulated log-likelihoods.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "sbim/features.hpp"
#include "sbim/types.hpp"

namespace sbim {

/// Weighted least squares for a fixed design and weights. The singular value
/// decomposition of sqrt(W) X is computed once, so several response vectors
/// (e.g. one per data block) can be regressed cheaply.
class WeightedLeastSquares {
 public:
  WeightedLeastSquares(const Matrix& design, const Vector& weights)
      : x_(design), w_(weights), sqrt_w_(weights.cwiseSqrt()) {
    if (design.rows() != weights.size()) throw DomainError("least squares: design/weight length mismatch");
    if (design.rows() < design.cols())
      throw RankDeficientError("least squares: fewer rows (" + std::to_string(design.rows()) +
                               ") than coefficients (" + std::to_string(design.cols()) + ")");
    const Matrix xw = sqrt_w_.asDiagonal() * design;
    svd_.compute(xw, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd_.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (!(smax > 0.0) || smin < 1e-10 * smax) {
      std::ostringstream msg;
      msg << "weighted design is rank deficient: smallest/largest singular value = "
          << (smax > 0.0 ? smin / smax : 0.0) << " (threshold 1e-10)";
      throw RankDeficientError(msg.str());
    }
  }

  Vector solve(const Vector& y) const {
    if (y.size() != x_.rows()) throw DomainError("least squares: response length mismatch");
    const Vector uty = svd_.matrixU().transpose() * (sqrt_w_.cwiseProduct(y));
    return svd_.matrixV() * uty.cwiseQuotient(svd_.singularValues());
  }

  /// (X'WX)^{-1} from the decomposition, V S^-2 V'.
  Matrix info_inverse() const {
    const Vector inv_s2 = svd_.singularValues().cwiseAbs2().cwiseInverse();
    return svd_.matrixV() * inv_s2.asDiagonal() * svd_.matrixV().transpose();
  }

  Matrix info() const { return x_.transpose() * w_.asDiagonal() * x_; }

  /// Weighted residual sum of squares ||y - X coef||^2_W.
  double wrss(const Vector& y, const Vector& coef) const {
    const Vector r = y - x_ * coef;
    return r.dot(w_.cwiseProduct(r));
  }

  const Matrix& design() const { return x_; }
  const Vector& weights() const { return w_; }

 private:
  Matrix x_;
  Vector w_;
  Vector sqrt_w_;
  Eigen::JacobiSVD<Matrix> svd_;
};

namespace detail {

inline void check_fit_size(int M, int d) {
  if (M < quad_dim(d) + 1)
    throw DomainError("fit needs at least " + std::to_string(quad_dim(d) + 1) + " simulation points for d=" +
                      std::to_string(d) + ", got " + std::to_string(M));
}

inline MetaFit make_fit(const Vector& coef, double sigma2, Matrix info, int M, int d) {
  MetaFit fit;
  fit.a = coef(0);
  fit.b = coef.segment(1, d);
  fit.c = unvech(coef.tail(vech_dim(d)));
  fit.sigma2 = sigma2;
  fit.info = std::move(info);
  fit.M = M;
  fit.d = d;
  return fit;
}

}  // namespace detail

/// Quadratic fit to (points, values) with precision weights.
inline MetaFit fit_quadratic(const Matrix& points, const Vector& values, const Vector& weights) {
  const int M = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  detail::check_fit_size(M, d);
  const WeightedLeastSquares ls(quad_design(points), weights);
  const Vector coef = ls.solve(values);
  return detail::make_fit(coef, ls.wrss(values, coef) / M, ls.info(), M, d);
}

inline MetaFit fit_quadratic(const SimLogLikTable& table) {
  table.validate();
  return fit_quadratic(table.points, table.values, table.weights);
}

/// Smallest eigenvalue of -c; positive iff c is negative definite.
inline double negative_definiteness_margin(const Matrix& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(-symmetrize(c), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Maximizer -c^{-1} b / 2 of the fitted quadratic.
inline ParamPoint mesle_point(const MetaFit& fit) {
  const double margin = negative_definiteness_margin(fit.c);
  if (!(margin > 0.0)) {
    std::ostringstream msg;
    msg << "no interior maximizer: fitted curvature is not negative definite (largest eigenvalue of c = "
        << -margin << "); widen the design or treat the MESLE as unidentified";
    throw NotNegativeDefiniteError(msg.str());
  }
  return -0.5 * fit.c.ldlt().solve(fit.b);
}

/// Log ratio of the metamodel likelihood at (A0, sigma0sq) to its maximum.
inline double mllr_full(const MetaFit& fit, const SimLogLikTable& table, const Vector& A0, double sigma0sq) {
  if (!(sigma0sq > 0.0)) throw DomainError("mllr_full: sigma0sq must be positive");
  if (A0.size() != quad_dim(fit.d)) throw DomainError("mllr_full: coefficient vector has the wrong length");
  if (table.M() != fit.M || table.d() != fit.d) throw DomainError("mllr_full: table does not match fit");
  const Vector r = table.values - quad_design(table.points) * A0;
  const double wrss0 = r.dot(table.weights.cwiseProduct(r));
  const double M = fit.M;
  return 0.5 * M * std::log(fit.sigma2 / sigma0sq) - wrss0 / (2.0 * sigma0sq) + 0.5 * M;
}

/// Bound 2 (Bbar + 2 eps) / (delta lambda) on the distance between a
/// maximizer and its biased surrogate, valid when lambda delta^2 >= 2 (Bbar + 2 eps).
/// Returns nullopt when that precondition fails.
inline std::optional<double> proxy_bias_bound(double lambda_min, double delta, double Bbar, double eps) {
  if (!std::isfinite(lambda_min) || !std::isfinite(delta) || !std::isfinite(Bbar) || !std::isfinite(eps))
    throw DomainError("proxy_bias_bound: inputs must be finite");
  if (!(lambda_min > 0.0) || !(delta > 0.0)) throw DomainError("proxy_bias_bound: lambda and delta must be positive");
  if (Bbar < 0.0 || eps < 0.0) throw DomainError("proxy_bias_bound: Bbar and eps must be nonnegative");
  const double slack = Bbar + 2.0 * eps;
  if (lambda_min * delta * delta < 2.0 * slack) return std::nullopt;
  return 2.0 * slack / (delta * lambda_min);
}

}  // namespace sbim
