#pragma once

// Block estimate of K1, the per-observation covariance of the score of the
// expected simulated log-likelihood, from a single dataset.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbim/features.hpp"
#include "sbim/metamodel.hpp"
#include "sbim/types.hpp"

namespace sbim {

/// Contiguous blocks of observation indices (0-based, half-open).
struct BlockPartition {
  int n = 0;
  std::vector<int> starts;
  std::vector<int> sizes;

  int K() const { return static_cast<int>(sizes.size()); }
  int end(int k) const { return starts[k] + sizes[k]; }
};

/// Splits 0..n-1 into K contiguous blocks whose sizes differ by at most one
/// (larger blocks first). K <= 0 selects floor(sqrt(n)) clamped to [5, n/2].
inline BlockPartition default_blocks(int n, int K = 0) {
  if (n < 4) throw DomainError("blocks: need at least 4 observations, got " + std::to_string(n));
  if (K <= 0) K = std::clamp(static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))), 5, n / 2);
  if (K < 2) throw DomainError("blocks: need at least 2 blocks");
  if (n < 2 * K)
    throw DomainError("blocks: " + std::to_string(K) + " blocks need n >= " + std::to_string(2 * K) + ", got " +
                      std::to_string(n));
  BlockPartition part;
  part.n = n;
  const int base = n / K;
  const int extra = n % K;
  int start = 0;
  for (int k = 0; k < K; ++k) {
    const int size = base + (k < extra ? 1 : 0);
    part.starts.push_back(start);
    part.sizes.push_back(size);
    start += size;
  }
  return part;
}

/// Block sums of a per-observation vector.
inline Vector block_sums(const Vector& per_obs, const BlockPartition& part) {
  if (per_obs.size() != part.n) throw DomainError("block sums: vector length does not match partition");
  Vector out(part.K());
  for (int k = 0; k < part.K(); ++k) out(k) = per_obs.segment(part.starts[k], part.sizes[k]).sum();
  return out;
}

/// Slope b_k + 2 c_k vartheta of a weighted quadratic fitted to one block's values.
inline Vector block_slope(const SimLogLikTable& table, const Vector& block_values, const ParamPoint& vartheta) {
  if (block_values.size() != table.M()) throw DomainError("block slope: block values length must equal M");
  if (vartheta.size() != table.d()) throw DomainError("block slope: vartheta dimension mismatch");
  const MetaFit f = fit_quadratic(table.points, block_values, table.weights);
  return f.gradient(vartheta);
}

/// Monte Carlo part (sigma2/n) G U^{-1} G' of the block-slope variance, with
/// G = (0_d, I_d, 2 vartheta_mat).
inline Matrix cond_var_term(const MetaFit& fit, const ParamPoint& vartheta, int n) {
  if (n < 1) throw DomainError("cond_var_term: n must be positive");
  if (vartheta.size() != fit.d) throw DomainError("cond_var_term: vartheta dimension mismatch");
  const int d = fit.d;
  Eigen::LLT<Matrix> llt(fit.info);
  if (llt.info() != Eigen::Success) throw RankDeficientError("cond_var_term: information matrix is singular");
  Matrix G = Matrix::Zero(d, quad_dim(d));
  G.block(0, 1, d, d).setIdentity();
  G.rightCols(vech_dim(d)) = 2.0 * theta_mat(vartheta);
  const Matrix out = (fit.sigma2 / n) * (G * llt.solve(G.transpose()));
  return 0.5 * (out + out.transpose());
}

struct K1Estimate {
  Matrix matrix;
  Matrix var_term;
  Matrix cond_var_term;
  ParamPoint vartheta;
};

/// Between-block sample variance of scaled block slopes minus the Monte Carlo
/// contribution. The result may be indefinite; see project_psd.
inline K1Estimate estimate_k1(const SimLogLikTable& table, const BlockPartition& part,
                              const std::optional<ParamPoint>& vartheta = std::nullopt) {
  table.validate();
  if (!table.per_block_values) throw DomainError("estimate_k1: table has no per-block values");
  const Matrix& blocks = *table.per_block_values;
  if (part.K() < 2) throw DomainError("estimate_k1: need at least 2 blocks");
  if (blocks.cols() != part.K())
    throw DomainError("estimate_k1: table has " + std::to_string(blocks.cols()) + " block columns, partition has " +
                      std::to_string(part.K()));
  const int d = table.d();
  const int K = part.K();
  const int n = part.n;
  const ParamPoint theta = vartheta ? *vartheta : ParamPoint(table.points.colwise().mean().transpose());
  if (theta.size() != d) throw DomainError("estimate_k1: vartheta dimension mismatch");

  detail::check_fit_size(table.M(), d);
  const WeightedLeastSquares ls(quad_design(table.points), table.weights);
  Matrix G = Matrix::Zero(d, quad_dim(d));
  G.block(0, 1, d, d).setIdentity();
  G.rightCols(vech_dim(d)) = 2.0 * theta_mat(theta);

  Matrix slopes(d, K);
  for (int k = 0; k < K; ++k) slopes.col(k) = G * ls.solve(blocks.col(k));
  const Vector s_bar = slopes.rowwise().sum() / static_cast<double>(n);

  Matrix var = Matrix::Zero(d, d);
  for (int k = 0; k < K; ++k) {
    const Vector dev = slopes.col(k) / static_cast<double>(part.sizes[k]) - s_bar;
    var += static_cast<double>(part.sizes[k]) * dev * dev.transpose();
  }
  var /= static_cast<double>(K - 1);

  const Vector coef = ls.solve(table.values);
  const MetaFit full = detail::make_fit(coef, ls.wrss(table.values, coef) / table.M(), ls.info(), table.M(), d);

  K1Estimate est;
  est.var_term = 0.5 * (var + var.transpose());
  est.cond_var_term = cond_var_term(full, theta, n);
  est.matrix = est.var_term - est.cond_var_term;
  est.vartheta = theta;
  return est;
}

/// Nearest positive semidefinite matrix in Frobenius norm (eigenvalues clipped at 0).
inline Matrix project_psd(const Matrix& m) {
  const Matrix s = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  if (lam == es.eigenvalues()) return s;
  const Matrix out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

inline bool is_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) >= 0.0;
}

}  // namespace sbim
