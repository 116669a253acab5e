#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbim/error.hpp"

namespace sbim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point in the d-dimensional parameter space.
using ParamPoint = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Number of coefficients of a full quadratic in d variables: (1, theta, vech).
constexpr int quad_dim(int d) { return (d * d + 3 * d + 2) / 2; }

/// Length of the half-vectorization of a d x d symmetric matrix.
constexpr int vech_dim(int d) { return d * (d + 1) / 2; }

/// Simulated log-likelihoods evaluated at M parameter points.
///
/// Row m of `points` is theta_m; `values(m)` is the simulated log-likelihood
/// there and `weights(m)` its precision weight (e.g. the number of particles).
/// `per_block_values`, when present, is M x K: column k holds the sum of the
/// per-observation simulated log-likelihoods over the k-th contiguous block.
struct SimLogLikTable {
  Matrix points;
  Vector values;
  Vector weights;
  int n_obs = 0;
  std::optional<Matrix> per_block_values;

  int M() const { return static_cast<int>(points.rows()); }
  int d() const { return static_cast<int>(points.cols()); }
  ParamPoint point(int m) const { return points.row(m).transpose(); }

  /// Throws DomainError when the shape or value invariants are broken.
  void validate() const {
    if (points.cols() < 1) throw DomainError("table: parameter dimension must be at least 1");
    if (values.size() != points.rows())
      throw DomainError("table: values length does not match number of points");
    if (weights.size() != points.rows())
      throw DomainError("table: weights length does not match number of points");
    if (!points.allFinite()) throw DomainError("table: non-finite parameter coordinate");
    if (!values.allFinite()) throw DomainError("table: non-finite log-likelihood value");
    for (Eigen::Index m = 0; m < weights.size(); ++m) {
      if (!(weights(m) > 0.0) || !std::isfinite(weights(m)))
        throw DomainError("table: weights must be finite and strictly positive");
    }
    if (per_block_values) {
      if (per_block_values->rows() != points.rows())
        throw DomainError("table: per-block matrix must have one row per point");
      if (!per_block_values->allFinite())
        throw DomainError("table: non-finite per-block value");
    }
  }
};

/// Weighted least-squares fit of the conditional metamodel
/// l^S(theta) ~ N(a + b'theta + theta' c theta, sigma2 / w(theta)).
struct MetaFit {
  double a = 0.0;
  Vector b;
  Matrix c;
  double sigma2 = 0.0;
  /// U = X' W X for the quadratic design X = (1, theta', vech(theta^2)').
  Matrix info;
  int M = 0;
  int d = 0;

  /// Stacked coefficient vector (a, b', vech(c)').
  Vector coefficients() const;

  /// Value of the fitted quadratic at theta.
  double eval(const ParamPoint& theta) const {
    return a + b.dot(theta) + theta.dot(c * theta);
  }

  /// Gradient b + 2 c theta of the fitted quadratic.
  Vector gradient(const ParamPoint& theta) const { return b + 2.0 * c * theta; }
};

/// Result of an F-calibrated metamodel likelihood-ratio test.
struct TestResult {
  double statistic = 0.0;
  int df1 = 0;
  double df2 = 0.0;
  double p_value = 1.0;
  double mllr = 0.0;
};

/// One-dimensional confidence set. Half-lines are reported as intervals with
/// one infinite bound.
struct ConfidenceSet {
  enum class Kind { interval, complement_of_interval, full_line, empty };

  Kind kind = Kind::empty;
  std::vector<double> bounds;
  double level = 0.0;

  bool contains(double x) const {
    switch (kind) {
      case Kind::interval:
        return x >= bounds[0] && x <= bounds[1];
      case Kind::complement_of_interval:
        return x <= bounds[0] || x >= bounds[1];
      case Kind::full_line:
        return true;
      case Kind::empty:
        return false;
    }
    return false;
  }
};

inline std::string to_string(ConfidenceSet::Kind kind) {
  switch (kind) {
    case ConfidenceSet::Kind::interval: return "interval";
    case ConfidenceSet::Kind::complement_of_interval: return "complement_of_interval";
    case ConfidenceSet::Kind::full_line: return "full_line";
    case ConfidenceSet::Kind::empty: return "empty";
  }
  return "empty";
}

/// Result of scanning a grid of null values.
struct RegionPoint {
  ParamPoint point;
  bool inside = false;
  double p_value = 0.0;
};

}  // namespace sbim
