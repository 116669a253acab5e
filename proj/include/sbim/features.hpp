#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "sbim/types.hpp"

namespace sbim {

namespace detail {

// Position of entry (i, j), i >= j, inside vech of a d x d matrix.
inline int vech_index(int d, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * d - j * (j - 1) / 2 + (i - j);
}

inline int triangular_root(Eigen::Index len) {
  const int d = static_cast<int>(std::lround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  return vech_dim(d) == len ? d : -1;
}

}  // namespace detail

/// Symmetrizes c as (c + c')/2 after checking that the asymmetry is within
/// 1e-10 of the largest entry.
inline Matrix symmetrize(const Matrix& c) {
  if (c.rows() != c.cols()) throw DomainError("matrix is not square");
  if (c.size() == 0) return c;
  const double scale = c.cwiseAbs().maxCoeff();
  const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) throw DomainError("matrix is not symmetric (asymmetry " + std::to_string(asym) + ")");
  return 0.5 * (c + c.transpose());
}

/// Half-vectorization: column-major stacking of the lower triangle,
/// (c11, c21, ..., cd1, c22, ..., cdd).
inline Vector vech(const Matrix& c) {
  const Matrix s = symmetrize(c);
  const int d = static_cast<int>(s.rows());
  Vector v(vech_dim(d));
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) v(k++) = s(i, j);
  return v;
}

/// Inverse of vech.
inline Matrix unvech(const Vector& v) {
  const int d = detail::triangular_root(v.size());
  if (d < 1) throw DomainError("unvech: length " + std::to_string(v.size()) + " is not a triangular number");
  Matrix c(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) {
      c(i, j) = v(k);
      c(j, i) = v(k);
      ++k;
    }
  return c;
}

/// vech(theta^2) where theta^2 has diagonal theta_k^2 and off-diagonal
/// 2 theta_k theta_l, so that theta' c theta = vech(theta^2)' vech(c).
inline Vector vech_square(const ParamPoint& theta) {
  const int d = static_cast<int>(theta.size());
  Vector v(vech_dim(d));
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) v(k++) = (i == j ? 1.0 : 2.0) * theta(i) * theta(j);
  return v;
}

/// Quadratic feature vector (1, theta', vech(theta^2)').
inline Vector quad_features(const ParamPoint& theta) {
  const int d = static_cast<int>(theta.size());
  Vector f(quad_dim(d));
  f(0) = 1.0;
  f.segment(1, d) = theta;
  f.tail(vech_dim(d)) = vech_square(theta);
  return f;
}

/// d x d(d+1)/2 matrix with c * theta = theta_mat(theta) * vech(c).
inline Matrix theta_mat(const ParamPoint& theta) {
  const int d = static_cast<int>(theta.size());
  Matrix t = Matrix::Zero(d, vech_dim(d));
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) t(r, detail::vech_index(d, r, s)) += theta(s);
  return t;
}

/// Stacked quadratic design: row m is quad_features(points.row(m)).
inline Matrix quad_design(const Matrix& points) {
  const int d = static_cast<int>(points.cols());
  Matrix x(points.rows(), quad_dim(d));
  for (Eigen::Index m = 0; m < points.rows(); ++m)
    x.row(m) = quad_features(points.row(m).transpose()).transpose();
  return x;
}

/// Number of degree-3 monomials in d variables.
constexpr int cubic_monomial_count(int d) { return d * (d + 1) * (d + 2) / 6; }

/// All monomials of degree <= 3: the quadratic features followed by the
/// products theta_i theta_j theta_k, i <= j <= k.
inline Vector cubic_features(const ParamPoint& theta) {
  const int d = static_cast<int>(theta.size());
  Vector f(quad_dim(d) + cubic_monomial_count(d));
  f.head(quad_dim(d)) = quad_features(theta);
  int k = quad_dim(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int l = j; l < d; ++l) f(k++) = theta(i) * theta(j) * theta(l);
  return f;
}

inline Matrix cubic_design(const Matrix& points) {
  const int d = static_cast<int>(points.cols());
  Matrix x(points.rows(), quad_dim(d) + cubic_monomial_count(d));
  for (Eigen::Index m = 0; m < points.rows(); ++m)
    x.row(m) = cubic_features(points.row(m).transpose()).transpose();
  return x;
}

inline Vector MetaFit::coefficients() const {
  Vector coef(quad_dim(d));
  coef(0) = a;
  coef.segment(1, d) = b;
  coef.tail(vech_dim(d)) = vech(c);
  return coef;
}

}  // namespace sbim
