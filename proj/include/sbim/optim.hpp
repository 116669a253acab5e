#pragma once

// Small BFGS minimizer with central-difference gradients and a backtracking
// Armijo line search.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "sbim/types.hpp"

namespace sbim {

struct BfgsOptions {
  int max_iter = 200;
  double f_tol = 1e-8;     // relative change of the objective
  double g_tol = 1e-10;    // gradient max-norm
  double fd_step = 1e-6;   // relative finite-difference step
};

struct BfgsResult {
  Vector x;
  double value = kInf;
  int iterations = 0;
  bool converged = false;
};

inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double rel_step) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = rel_step * std::max(1.0, std::fabs(x(k)));
    xp(k) = x(k) + h;
    const double fp = f(xp);
    xp(k) = x(k) - h;
    const double fm = f(xp);
    xp(k) = x(k);
    g(k) = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline BfgsResult bfgs_minimize(const std::function<double(const Vector&)>& f, const Vector& x0,
                                const BfgsOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  Vector x = x0;
  double fx = f(x);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    return res;
  }
  Vector g = numeric_gradient(f, x, opt.fd_step);
  Matrix H = Matrix::Identity(n, n);
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it + 1;
    if (!g.allFinite()) break;
    if (g.cwiseAbs().maxCoeff() < opt.g_tol) {
      res.converged = true;
      break;
    }
    Vector p = -H * g;
    if (g.dot(p) >= 0.0) {
      H.setIdentity();
      p = -g;
    }
    double step = 1.0;
    Vector x_new;
    double f_new = kInf;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * p;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * g.dot(p)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      res.converged = true;  // no descent possible at this resolution
      break;
    }
    const Vector g_new = numeric_gradient(f, x_new, opt.fd_step);
    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double change = std::fabs(f_new - fx);
    x = x_new;
    g = g_new;
    const double f_old = fx;
    fx = f_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (change <= opt.f_tol * (1.0 + std::fabs(f_old))) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace sbim
