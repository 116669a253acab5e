#pragma once

#include <algorithm>
#include <cmath>

#include "sbim/types.hpp"

namespace sbim {

/// The set { x : A x^2 + B x + C <= 0 }, classified by topology.
///
/// A leading coefficient within 1e-12 of max(|A|,|B|,|C|) is treated as zero
/// and the linear inequality gives a half-line (an interval with one infinite
/// bound). A discriminant within 1e-12 of B^2 + |4AC| is treated as zero.
inline ConfidenceSet quadratic_sublevel_set(double A, double B, double C, double level) {
  if (!std::isfinite(A) || !std::isfinite(B) || !std::isfinite(C))
    throw DomainError("confidence set: non-finite quadratic coefficients");
  ConfidenceSet set;
  set.level = level;
  const double scale = std::max({std::fabs(A), std::fabs(B), std::fabs(C)});
  if (scale == 0.0) {
    set.kind = ConfidenceSet::Kind::full_line;
    return set;
  }
  if (std::fabs(A) <= 1e-12 * scale) {
    if (B == 0.0 || std::fabs(B) <= 1e-12 * scale) {
      set.kind = C <= 0.0 ? ConfidenceSet::Kind::full_line : ConfidenceSet::Kind::empty;
      return set;
    }
    const double root = -C / B;
    set.kind = ConfidenceSet::Kind::interval;
    set.bounds = B > 0.0 ? std::vector<double>{-kInf, root} : std::vector<double>{root, kInf};
    return set;
  }
  double disc = B * B - 4.0 * A * C;
  if (std::fabs(disc) <= 1e-12 * (B * B + std::fabs(4.0 * A * C))) disc = 0.0;
  if (disc <= 0.0) {
    // A > 0 leaves at most a single touching point, which we report as empty.
    set.kind = A > 0.0 ? ConfidenceSet::Kind::empty : ConfidenceSet::Kind::full_line;
    return set;
  }
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  double r1 = q / A;
  double r2 = C / q;
  if (r1 > r2) std::swap(r1, r2);
  set.kind = A > 0.0 ? ConfidenceSet::Kind::interval : ConfidenceSet::Kind::complement_of_interval;
  set.bounds = {r1, r2};
  return set;
}

}  // namespace sbim
