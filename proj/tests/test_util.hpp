#pragma once

#include <utility>
#include <vector>

#include "tlnn/formula.hpp"
#include "tlnn/rng.hpp"

namespace tlnn::test {

inline Signal random_signal(Rng& rng, int n, double lo = -2.0,
                            double hi = 2.0) {
  Signal s;
  s.samples.resize(static_cast<std::size_t>(n));
  for (double& v : s.samples) v = rng.uniform(lo, hi);
  return s;
}

/* Random formula with positive weights whose horizon never exceeds
 * `budget`, so it evaluates at t=0 on signals of length budget+1. `depth`
 * bounds operator nesting. */
inline Formula random_formula(Rng& rng, int depth, int budget) {
  const int pick = depth <= 0 ? 0 : rng.uniform_int(0, 5);
  auto weight = [&rng] { return rng.uniform(0.1, 2.0); };
  switch (pick) {
    case 1:
      return Formula::negation(random_formula(rng, depth - 1, budget));
    case 2:
    case 3: {
      const int arity = rng.uniform_int(2, 3);
      std::vector<Formula> kids;
      std::vector<double> ws;
      for (int i = 0; i < arity; ++i) {
        kids.push_back(random_formula(rng, depth - 1, budget));
        ws.push_back(weight());
      }
      return pick == 2 ? Formula::conjunction(std::move(kids), std::move(ws))
                       : Formula::disjunction(std::move(kids), std::move(ws));
    }
    case 4:
    case 5: {
      const int tau1 = rng.uniform_int(0, budget);
      const int tau2 = rng.uniform_int(tau1, budget);
      std::vector<double> ws;
      for (int i = tau1; i <= tau2; ++i) ws.push_back(weight());
      Formula child = random_formula(rng, depth - 1, budget - tau2);
      return pick == 4 ? Formula::always(tau1, tau2, std::move(child),
                                         std::move(ws))
                       : Formula::eventually(tau1, tau2, std::move(child),
                                             std::move(ws));
    }
    default:
      return Formula::predicate(rng.coin() ? Cmp::Ge : Cmp::Lt,
                                rng.uniform(-1.0, 1.0), weight());
  }
}

}  // namespace tlnn::test
