#pragma once

#include <cmath>
#include <utility>

#include "aarc/core.hpp"

namespace aarc {

enum class Degree { cubic, quadratic };

/// psi(z) = a + b^T z + (varsigma/6)|z - anchor|^3   (cubic)
/// psi(z) = a + b^T z + (varsigma/4)|z - anchor|^2   (quadratic)
struct EstimateState {
  Degree degree = Degree::cubic;
  Vector anchor;
  double a = 0.0;
  Vector b;
  double varsigma = 1.0;
  int l = 1;
  double weight_sum = 1.0;
  // Affine part evaluated at the anchor, accumulated term by term, and the sum of the
  // magnitudes of those terms; together they bound the rounding error of psi.
  double a_at_anchor = 0.0;
  double magnitude = 0.0;
};

inline EstimateState init_estimate(Degree degree, const Vector &anchor, double f_anchor, double varsigma1) {
  if (!(varsigma1 > 0.0))
    throw Error("init_estimate: varsigma must be positive");
  EstimateState s;
  s.degree = degree;
  s.anchor = anchor;
  s.a = f_anchor;
  s.b = Vector::Zero(anchor.size());
  s.varsigma = varsigma1;
  s.a_at_anchor = f_anchor;
  s.magnitude = std::abs(f_anchor);
  return s;
}

inline EstimateState add_linear(EstimateState s, double weight, const Vector &point, double f_point,
                                const Vector &grad_point) {
  if (!(weight > 0.0))
    throw Error("add_linear: weight must be positive");
  require_dim(point, s.anchor.size(), "add_linear point");
  require_dim(grad_point, s.anchor.size(), "add_linear gradient");
  s.a += weight * (f_point - point.dot(grad_point));
  s.b += weight * grad_point;
  const double lin = (s.anchor - point).dot(grad_point);
  s.a_at_anchor += weight * (f_point + lin);
  s.magnitude += weight * (std::abs(f_point) + std::abs(lin));
  s.weight_sum += weight;
  ++s.l;
  return s;
}

inline EstimateState raise_varsigma(EstimateState s, double new_varsigma) {
  if (new_varsigma < s.varsigma)
    throw Error("raise_varsigma: varsigma may not decrease");
  s.varsigma = new_varsigma;
  return s;
}

inline double estimate_regularizer(const EstimateState &s, double r) {
  return s.degree == Degree::cubic ? s.varsigma / 6.0 * cube(r) : s.varsigma / 4.0 * r * r;
}

inline double eval_estimate(const EstimateState &s, const Vector &z) {
  require_dim(z, s.anchor.size(), "eval_estimate");
  const Vector w = z - s.anchor;
  return s.a_at_anchor + s.b.dot(w) + estimate_regularizer(s, w.norm());
}

inline std::pair<Vector, double> minimize_estimate(const EstimateState &s) {
  if (!(s.varsigma > 0.0))
    throw Error("minimize_estimate: varsigma must be positive");
  Vector z;
  if (s.degree == Degree::cubic) {
    const double nb = s.b.norm();
    z = nb == 0.0 ? s.anchor : Vector(s.anchor - std::sqrt(2.0 / (s.varsigma * nb)) * s.b);
  } else {
    z = s.anchor - (2.0 / s.varsigma) * s.b;
  }
  const double psi = eval_estimate(s, z);
  return {std::move(z), psi};
}

} // namespace aarc
