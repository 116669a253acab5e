#pragma once

// Linear-Gaussian state space model X_i = A X_{i-1} + v_i, Y_i = X_i + e_i,
// v_i ~ N(0, Q), e_i ~ N(0, R). A has a common diagonal entry and every
// off-diagonal entry equal to the parameter theta. X_1 is drawn from the
// stationary law N(0, Sigma_inf).

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbim/error.hpp"
#include "sbim/rng.hpp"
#include "sbim/types.hpp"

namespace sbim::models {

struct LgssModel {
  int dim = 2;
  double diag = -0.3;
  Matrix process_cov;
  Matrix meas_cov;

  static LgssModel standard(int dim) {
    LgssModel m;
    m.dim = dim;
    m.process_cov = Matrix::Identity(dim, dim);
    m.meas_cov = Matrix::Identity(dim, dim);
    return m;
  }

  Matrix transition(double theta) const {
    Matrix A = Matrix::Constant(dim, dim, theta);
    A.diagonal().setConstant(diag);
    return A;
  }
};

inline double spectral_radius(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Solution of S = A S A' + Q by the doubling iteration. When A is not
/// stable a warning is issued and Q is returned as the initial covariance.
inline Matrix stationary_cov(const Matrix& A, const Matrix& Q) {
  const double rho = spectral_radius(A);
  if (!(rho < 1.0)) {
    warn("transition matrix has spectral radius " + std::to_string(rho) +
         " >= 1; initial state covariance falls back to the process covariance");
    return Q;
  }
  Matrix S = Q;
  Matrix Ak = A;
  for (int it = 0; it < 200; ++it) {
    const Matrix inc = Ak * S * Ak.transpose();
    S += inc;
    Ak = Ak * Ak;
    if (inc.cwiseAbs().maxCoeff() <= 1e-16 * S.cwiseAbs().maxCoeff()) break;
  }
  return 0.5 * (S + S.transpose());
}

inline Eigen::LLT<Matrix> require_spd(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw DomainError(std::string(what) + " is not symmetric positive definite");
  return llt;
}

/// Observation sequence y_1..y_n.
inline std::vector<Vector> lgss_simulate(const LgssModel& model, double theta, int n, Rng& rng) {
  const Matrix A = model.transition(theta);
  const Matrix L0 = require_spd(stationary_cov(A, model.process_cov), "stationary covariance").matrixL();
  const Matrix LQ = require_spd(model.process_cov, "process covariance").matrixL();
  const Matrix LR = require_spd(model.meas_cov, "measurement covariance").matrixL();
  auto gauss = [&](const Matrix& L) {
    Vector z(model.dim);
    for (int k = 0; k < model.dim; ++k) z(k) = rng.normal();
    return Vector(L * z);
  };
  std::vector<Vector> y;
  y.reserve(n);
  Vector x = gauss(L0);
  for (int i = 0; i < n; ++i) {
    if (i > 0) x = A * x + gauss(LQ);
    y.push_back(x + gauss(LR));
  }
  return y;
}

/// Exact log-likelihood by the Kalman filter.
inline double kalman_loglik(const LgssModel& model, const std::vector<Vector>& y, double theta) {
  const int k = model.dim;
  const Matrix A = model.transition(theta);
  Vector x = Vector::Zero(k);
  Matrix P = stationary_cov(A, model.process_cov);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i].size() != k) throw DomainError("kalman: observation dimension mismatch");
    if (i > 0) {
      x = A * x;
      P = A * P * A.transpose() + model.process_cov;
    }
    const Matrix S = P + model.meas_cov;
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) throw DomainError("kalman: innovation covariance is not positive definite");
    const Vector innov = y[i] - x;
    const Vector sol = llt.solve(innov);
    const double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    total += -0.5 * (k * std::log(2.0 * std::numbers::pi) + logdet + innov.dot(sol));
    const Matrix gain = P * llt.solve(Matrix::Identity(k, k));
    x += gain * innov;
    P = P - gain * P;
    P = 0.5 * (P + P.transpose());
  }
  return total;
}

/// Particle-filter view of the model; the parameter point is (theta).
struct LgssPomp {
  LgssModel model;

  using State = Vector;
  struct Params {
    Matrix A;
    Matrix chol_init;
    Matrix chol_process;
    Eigen::LLT<Matrix> meas_llt;
    double log_norm = 0.0;
  };

  explicit LgssPomp(LgssModel m) : model(std::move(m)) {}

  Params params(const ParamPoint& theta) const {
    if (theta.size() != 1) throw DomainError("lgss: parameter point must have one coordinate");
    Params p;
    p.A = model.transition(theta(0));
    p.chol_init = require_spd(stationary_cov(p.A, model.process_cov), "stationary covariance").matrixL();
    p.chol_process = require_spd(model.process_cov, "process covariance").matrixL();
    p.meas_llt = require_spd(model.meas_cov, "measurement covariance");
    const double logdet = 2.0 * Matrix(p.meas_llt.matrixL()).diagonal().array().log().sum();
    p.log_norm = -0.5 * (model.dim * std::log(2.0 * std::numbers::pi) + logdet);
    return p;
  }

  State init_state(const Params& p, Rng& rng) const { return p.chol_init * draw(rng); }

  State step_state(const State& x, int, const Params& p, Rng& rng) const {
    return p.A * x + p.chol_process * draw(rng);
  }

  double meas_logdensity(const Vector& y, const State& x, int, const Params& p) const {
    const Vector r = y - x;
    return p.log_norm - 0.5 * r.dot(p.meas_llt.solve(r));
  }

 private:
  Vector draw(Rng& rng) const {
    Vector z(model.dim);
    for (int k = 0; k < model.dim; ++k) z(k) = rng.normal();
    return z;
  }
};

inline LgssPomp lgss_as_pomp(const LgssModel& model) { return LgssPomp(model); }

}  // namespace sbim::models
