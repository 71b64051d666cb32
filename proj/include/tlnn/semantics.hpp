#pragma once

#include "tlnn/formula.hpp"

namespace tlnn {

/* Three evaluations of a formula over a signal at time index t. All throw
 * HorizonError when t + horizon(f) runs past the last sample.
 *
 * eval_boolean        classical satisfaction.
 * robustness_classic  min/max robustness; weights are ignored.
 * robustness_weighted weighted robustness: predicates contribute
 *                     (w/2)(x(t)-c) resp. (w/2)(c-x(t)); conjunctive
 *                     combinations take the geometric mean of (1+w*rho)
 *                     minus 1 when every operand is positive and the
 *                     average clipped-negative part otherwise; disjunctive
 *                     combinations mirror that. A strictly positive value
 *                     implies satisfaction, a strictly negative one implies
 *                     violation. */
bool eval_boolean(const Formula& f, const Signal& x, int t = 0);
double robustness_classic(const Formula& f, const Signal& x, int t = 0);
double robustness_weighted(const Formula& f, const Signal& x, int t = 0);

}  // namespace tlnn
