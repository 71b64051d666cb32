#pragma once

#include <cmath>
#include <span>

namespace tlnn::detail {

// [q]+ and [q]-; they satisfy [q]+ + [q]- = q and [q]- = -[-q]+.
inline double positive_part(double q) { return q > 0.0 ? q : 0.0; }
inline double negative_part(double q) { return q < 0.0 ? q : 0.0; }

struct GateEval {
  double value = 0.0;
  bool positive_branch = false;
};

/* Conjunctive gate over operand values v with weights w. When every
 * operand is strictly positive the result is the geometric mean of
 * (1 + w*v) minus 1, computed in log space; otherwise it is the mean of
 * the clipped negative parts [w*v]-. On the geometric branch v > 0 and
 * w >= 0 keep every factor >= 1. */
inline GateEval gate_and(std::span<const double> v, std::span<const double> w) {
  const double n = static_cast<double>(v.size());
  bool all_positive = true;
  for (double vi : v) {
    if (!(vi > 0.0)) {
      all_positive = false;
      break;
    }
  }
  if (all_positive) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += std::log1p(w[i] * v[i]);
    return {std::expm1(s / n), true};
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += negative_part(w[i] * v[i]);
  return {s / n, false};
}

/* Disjunctive gate, the mirror image: mean of the clipped positive parts
 * when some operand is strictly positive, otherwise one minus the
 * geometric mean of (1 - w*v). */
inline GateEval gate_or(std::span<const double> v, std::span<const double> w) {
  const double n = static_cast<double>(v.size());
  bool any_positive = false;
  for (double vi : v) {
    if (vi > 0.0) {
      any_positive = true;
      break;
    }
  }
  if (any_positive) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += positive_part(w[i] * v[i]);
    return {s / n, true};
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += std::log1p(-(w[i] * v[i]));
  return {-std::expm1(s / n), false};
}

}  // namespace tlnn::detail
