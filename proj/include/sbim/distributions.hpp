#pragma once

// Special functions and reference distributions used to calibrate the
// metamodel tests: regularized incomplete beta and gamma functions, the F,
// chi-square and standard normal distributions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sbim/error.hpp"

namespace sbim::dist {

namespace detail {

inline constexpr int kMaxIter = 20000;
inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
inline double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta: continued fraction did not converge");
}

// Series for P(a, x), valid for x < a + 1.
inline double gamma_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw Error("incomplete gamma: series did not converge");
}

// Continued fraction for Q(a, x), valid for x >= a + 1.
inline double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps)
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  }
  throw Error("incomplete gamma: continued fraction did not converge");
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

inline void require_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie in (0, 1)");
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  detail::require_positive(a, "incomplete beta: a");
  detail::require_positive(b, "incomplete beta: b");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - detail::log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Regularized lower incomplete gamma function P(a, x).
inline double incomplete_gamma_p(double a, double x) {
  detail::require_positive(a, "incomplete gamma: a");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return detail::gamma_series(a, x);
  return 1.0 - detail::gamma_continued_fraction(a, x);
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
inline double incomplete_gamma_q(double a, double x) {
  detail::require_positive(a, "incomplete gamma: a");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_series(a, x);
  return detail::gamma_continued_fraction(a, x);
}

namespace detail {

// Solves I_z(a, b) = p for z in (0, 1): Newton steps on the bracketing
// interval, falling back to bisection whenever a step leaves the bracket.
inline double inverse_incomplete_beta(double a, double b, double p) {
  double lo = 0.0;
  double hi = 1.0;
  double z = 0.5;
  const double lbeta = log_beta(a, b);
  for (int it = 0; it < 400; ++it) {
    const double f = incomplete_beta(a, b, z) - p;
    if (f == 0.0) return z;
    if (f < 0.0) lo = z; else hi = z;
    const double log_density = (a - 1.0) * std::log(z) + (b - 1.0) * std::log1p(-z) - lbeta;
    double next = z - f / std::exp(log_density);
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::fabs(next - z) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(z, 1e-300)) return next;
    if (hi - lo <= std::numeric_limits<double>::min()) return next;
    z = next;
  }
  return z;
}

}  // namespace detail

/// CDF of the F(df1, df2) distribution.
inline double f_cdf(double x, double df1, double df2) {
  detail::require_positive(df1, "F: df1");
  detail::require_positive(df2, "F: df2");
  if (std::isnan(x)) throw DomainError("F: argument is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double z = df1 * x / (df1 * x + df2);
  if (z < 0.5) return incomplete_beta(0.5 * df1, 0.5 * df2, z);
  return 1.0 - incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * x));
}

/// Upper tail P[F(df1, df2) > x], computed without cancellation.
inline double f_sf(double x, double df1, double df2) {
  detail::require_positive(df1, "F: df1");
  detail::require_positive(df2, "F: df2");
  if (std::isnan(x)) throw DomainError("F: argument is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double w = df2 / (df2 + df1 * x);
  if (w < 0.5) return incomplete_beta(0.5 * df2, 0.5 * df1, w);
  return 1.0 - incomplete_beta(0.5 * df1, 0.5 * df2, df1 * x / (df1 * x + df2));
}

/// Quantile function of F(df1, df2).
inline double f_quantile(double p, double df1, double df2) {
  detail::require_probability(p);
  detail::require_positive(df1, "F: df1");
  detail::require_positive(df2, "F: df2");
  if (p <= 0.5) {
    const double z = detail::inverse_incomplete_beta(0.5 * df1, 0.5 * df2, p);
    return df2 * z / (df1 * (1.0 - z));
  }
  const double w = detail::inverse_incomplete_beta(0.5 * df2, 0.5 * df1, 1.0 - p);
  return df2 * (1.0 - w) / (df1 * w);
}

/// Upper-alpha critical value: P[F > f_critical(alpha)] = alpha.
inline double f_critical(double alpha, double df1, double df2) {
  detail::require_probability(alpha);
  detail::require_positive(df1, "F: df1");
  detail::require_positive(df2, "F: df2");
  const double w = detail::inverse_incomplete_beta(0.5 * df2, 0.5 * df1, alpha);
  return df2 * (1.0 - w) / (df1 * w);
}

inline double chi2_cdf(double x, double k) {
  detail::require_positive(k, "chi-square: degrees of freedom");
  if (x <= 0.0) return 0.0;
  return incomplete_gamma_p(0.5 * k, 0.5 * x);
}

inline double chi2_sf(double x, double k) {
  detail::require_positive(k, "chi-square: degrees of freedom");
  if (x <= 0.0) return 1.0;
  return incomplete_gamma_q(0.5 * k, 0.5 * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal quantile: rational starting value refined by Halley steps.
inline double normal_quantile(double p) {
  detail::require_probability(p);
  if (p > 0.5) return -normal_quantile(1.0 - p);
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

/// Log density of the Student t distribution with nu degrees of freedom.
inline double student_t_logpdf(double x, double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
         0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

/// Log of the Poisson probability mass at integer y >= 0 with mean mu.
inline double poisson_logpmf(double y, double mu) {
  if (mu <= 0.0) return y == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return y * std::log(mu) - mu - std::lgamma(y + 1.0);
}

}  // namespace sbim::dist
