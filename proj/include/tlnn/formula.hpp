#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace tlnn {

// Discrete-time, real-valued signal. Temporal indices count samples; the
// sample period is carried as metadata only.
struct Signal {
  std::vector<double> samples;
  double sample_period = 1.0;

  std::size_t size() const { return samples.size(); }
  double operator[](std::size_t t) const { return samples[t]; }
};

enum class Cmp { Ge, Lt };

enum class FormulaKind { Predicate, Not, And, Or, Always, Eventually };

/* Immutable formula AST. Nodes are reference counted, so copies are cheap
 * and share structure. Construction goes through the factories, which
 * enforce the invariants:
 *   - all weights are finite and non-negative,
 *   - temporal intervals satisfy 0 <= tau1 <= tau2,
 *   - And/Or take at least two children, temporal nodes exactly one,
 *   - a temporal weight vector has one entry per window step,
 *   - an And/Or weight vector has one entry per child.
 * Omitted weight vectors default to all ones. */
class Formula {
 public:
  static Formula predicate(Cmp cmp, double threshold, double weight = 1.0);
  static Formula negation(Formula child);
  static Formula conjunction(std::vector<Formula> children,
                             std::vector<double> weights = {});
  static Formula disjunction(std::vector<Formula> children,
                             std::vector<double> weights = {});
  static Formula always(int tau1, int tau2, Formula child,
                        std::vector<double> weights = {});
  static Formula eventually(int tau1, int tau2, Formula child,
                            std::vector<double> weights = {});

  FormulaKind kind() const;
  bool is_temporal() const {
    return kind() == FormulaKind::Always || kind() == FormulaKind::Eventually;
  }

  Cmp cmp() const;          // Predicate only
  double threshold() const; // Predicate only
  double weight() const;    // Predicate scale factor
  int tau1() const;         // temporal only
  int tau2() const;         // temporal only
  int window_length() const { return tau2() - tau1() + 1; }

  const std::vector<Formula>& children() const;
  const Formula& child(std::size_t i = 0) const;

  // And/Or: one weight per child. Always/Eventually: one per window step.
  const std::vector<double>& weights() const;

  // Longest look-ahead, in samples, needed to evaluate at a time index.
  int horizon() const;

  // Exact structural identity: kinds, intervals, thresholds and weights.
  bool structurally_equal(const Formula& other) const;

 private:
  struct Node;
  explicit Formula(Node n);
  std::shared_ptr<const Node> node_;
};

/* Canonical text form. parse_formula(format_formula(f)) rebuilds a
 * structurally identical AST. Weights are printed only where they differ
 * from 1; predicates always print parenthesized. */
std::string format_formula(const Formula& f);

// Same structure with every weight replaced by 1.
Formula strip_weights(const Formula& f);

// Shortest decimal text that parses back to exactly the same double.
std::string format_number(double value);

}  // namespace tlnn
