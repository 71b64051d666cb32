#include "tlnn/semantics.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "tlnn/errors.hpp"
#include "tlnn/robust_ops.hpp"

namespace tlnn {
namespace {

void check_window(const Formula& f, const Signal& x, int t) {
  const long last = static_cast<long>(t) + f.horizon();
  if (t < 0 || last >= static_cast<long>(x.size()))
    throw HorizonError("evaluation at t=" + std::to_string(t) + " needs sample " +
                       std::to_string(last) + " but the signal has " +
                       std::to_string(x.size()));
}

bool eval_rec(const Formula& f, const Signal& x, int t) {
  switch (f.kind()) {
    case FormulaKind::Predicate:
      return f.cmp() == Cmp::Ge ? x[static_cast<std::size_t>(t)] >= f.threshold()
                                : x[static_cast<std::size_t>(t)] < f.threshold();
    case FormulaKind::Not:
      return !eval_rec(f.child(), x, t);
    case FormulaKind::And:
      for (const Formula& c : f.children())
        if (!eval_rec(c, x, t)) return false;
      return true;
    case FormulaKind::Or:
      for (const Formula& c : f.children())
        if (eval_rec(c, x, t)) return true;
      return false;
    case FormulaKind::Always:
      for (int u = t + f.tau1(); u <= t + f.tau2(); ++u)
        if (!eval_rec(f.child(), x, u)) return false;
      return true;
    case FormulaKind::Eventually:
      for (int u = t + f.tau1(); u <= t + f.tau2(); ++u)
        if (eval_rec(f.child(), x, u)) return true;
      return false;
  }
  return false;
}

double classic_rec(const Formula& f, const Signal& x, int t) {
  switch (f.kind()) {
    case FormulaKind::Predicate: {
      const double v = x[static_cast<std::size_t>(t)];
      return f.cmp() == Cmp::Ge ? v - f.threshold() : f.threshold() - v;
    }
    case FormulaKind::Not:
      return -classic_rec(f.child(), x, t);
    case FormulaKind::And: {
      double r = classic_rec(f.children()[0], x, t);
      for (std::size_t i = 1; i < f.children().size(); ++i)
        r = std::min(r, classic_rec(f.children()[i], x, t));
      return r;
    }
    case FormulaKind::Or: {
      double r = classic_rec(f.children()[0], x, t);
      for (std::size_t i = 1; i < f.children().size(); ++i)
        r = std::max(r, classic_rec(f.children()[i], x, t));
      return r;
    }
    case FormulaKind::Always: {
      double r = classic_rec(f.child(), x, t + f.tau1());
      for (int u = t + f.tau1() + 1; u <= t + f.tau2(); ++u)
        r = std::min(r, classic_rec(f.child(), x, u));
      return r;
    }
    case FormulaKind::Eventually: {
      double r = classic_rec(f.child(), x, t + f.tau1());
      for (int u = t + f.tau1() + 1; u <= t + f.tau2(); ++u)
        r = std::max(r, classic_rec(f.child(), x, u));
      return r;
    }
  }
  return 0.0;
}

double weighted_rec(const Formula& f, const Signal& x, int t) {
  switch (f.kind()) {
    case FormulaKind::Predicate: {
      const double v = x[static_cast<std::size_t>(t)];
      const double m = f.cmp() == Cmp::Ge ? v - f.threshold() : f.threshold() - v;
      return 0.5 * f.weight() * m;
    }
    case FormulaKind::Not:
      return -weighted_rec(f.child(), x, t);
    case FormulaKind::And:
    case FormulaKind::Or: {
      std::vector<double> vals;
      vals.reserve(f.children().size());
      for (const Formula& c : f.children()) vals.push_back(weighted_rec(c, x, t));
      const auto g = f.kind() == FormulaKind::And
                         ? detail::gate_and(vals, f.weights())
                         : detail::gate_or(vals, f.weights());
      return g.value;
    }
    case FormulaKind::Always:
    case FormulaKind::Eventually: {
      std::vector<double> vals;
      vals.reserve(static_cast<std::size_t>(f.window_length()));
      for (int u = t + f.tau1(); u <= t + f.tau2(); ++u)
        vals.push_back(weighted_rec(f.child(), x, u));
      const auto g = f.kind() == FormulaKind::Always
                         ? detail::gate_and(vals, f.weights())
                         : detail::gate_or(vals, f.weights());
      return g.value;
    }
  }
  return 0.0;
}

}  // namespace

bool eval_boolean(const Formula& f, const Signal& x, int t) {
  check_window(f, x, t);
  return eval_rec(f, x, t);
}

double robustness_classic(const Formula& f, const Signal& x, int t) {
  check_window(f, x, t);
  return classic_rec(f, x, t);
}

double robustness_weighted(const Formula& f, const Signal& x, int t) {
  check_window(f, x, t);
  return weighted_rec(f, x, t);
}

}  // namespace tlnn
