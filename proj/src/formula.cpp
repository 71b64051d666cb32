#include "tlnn/formula.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <utility>

#include "tlnn/errors.hpp"

namespace tlnn {

struct Formula::Node {
  FormulaKind kind = FormulaKind::Predicate;
  Cmp cmp = Cmp::Ge;
  double threshold = 0.0;
  double weight = 1.0;
  int tau1 = 0;
  int tau2 = 0;
  std::vector<Formula> children;
  std::vector<double> weights;
};

Formula::Formula(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}

namespace {

void check_weight(double w, const char* what) {
  if (!std::isfinite(w)) throw FormulaError(std::string(what) + " weight is not finite");
  if (w < 0.0) throw FormulaError(std::string(what) + " weight is negative");
}

std::vector<double> resolve_weights(std::vector<double> w, std::size_t count,
                                    const char* what) {
  if (w.empty()) return std::vector<double>(count, 1.0);
  if (w.size() != count)
    throw FormulaError(std::string(what) + " has " + std::to_string(count) +
                       " operands but " + std::to_string(w.size()) + " weights");
  for (double v : w) check_weight(v, what);
  return w;
}

}  // namespace

Formula Formula::predicate(Cmp cmp, double threshold, double weight) {
  if (!std::isfinite(threshold)) throw FormulaError("predicate threshold is not finite");
  check_weight(weight, "predicate");
  Node n;
  n.kind = FormulaKind::Predicate;
  n.cmp = cmp;
  n.threshold = threshold;
  n.weight = weight;
  return Formula(std::move(n));
}

Formula Formula::negation(Formula child) {
  Node n;
  n.kind = FormulaKind::Not;
  n.children.push_back(std::move(child));
  return Formula(std::move(n));
}

Formula Formula::conjunction(std::vector<Formula> children,
                             std::vector<double> weights) {
  if (children.size() < 2) throw FormulaError("'&' needs at least two operands");
  Node n;
  n.kind = FormulaKind::And;
  n.weights = resolve_weights(std::move(weights), children.size(), "'&'");
  n.children = std::move(children);
  return Formula(std::move(n));
}

Formula Formula::disjunction(std::vector<Formula> children,
                             std::vector<double> weights) {
  if (children.size() < 2) throw FormulaError("'|' needs at least two operands");
  Node n;
  n.kind = FormulaKind::Or;
  n.weights = resolve_weights(std::move(weights), children.size(), "'|'");
  n.children = std::move(children);
  return Formula(std::move(n));
}

Formula Formula::always(int tau1, int tau2, Formula child,
                        std::vector<double> weights) {
  if (tau1 < 0 || tau2 < tau1)
    throw FormulaError("'G' interval [" + std::to_string(tau1) + "," +
                       std::to_string(tau2) + "] is invalid");
  Node n;
  n.kind = FormulaKind::Always;
  n.tau1 = tau1;
  n.tau2 = tau2;
  n.weights = resolve_weights(std::move(weights),
                              static_cast<std::size_t>(tau2 - tau1 + 1), "'G'");
  n.children.push_back(std::move(child));
  return Formula(std::move(n));
}

Formula Formula::eventually(int tau1, int tau2, Formula child,
                            std::vector<double> weights) {
  if (tau1 < 0 || tau2 < tau1)
    throw FormulaError("'F' interval [" + std::to_string(tau1) + "," +
                       std::to_string(tau2) + "] is invalid");
  Node n;
  n.kind = FormulaKind::Eventually;
  n.tau1 = tau1;
  n.tau2 = tau2;
  n.weights = resolve_weights(std::move(weights),
                              static_cast<std::size_t>(tau2 - tau1 + 1), "'F'");
  n.children.push_back(std::move(child));
  return Formula(std::move(n));
}

FormulaKind Formula::kind() const { return node_->kind; }
Cmp Formula::cmp() const { return node_->cmp; }
double Formula::threshold() const { return node_->threshold; }
double Formula::weight() const { return node_->weight; }
int Formula::tau1() const { return node_->tau1; }
int Formula::tau2() const { return node_->tau2; }
const std::vector<Formula>& Formula::children() const { return node_->children; }
const Formula& Formula::child(std::size_t i) const { return node_->children.at(i); }
const std::vector<double>& Formula::weights() const { return node_->weights; }

int Formula::horizon() const {
  switch (kind()) {
    case FormulaKind::Predicate:
      return 0;
    case FormulaKind::Not:
      return child().horizon();
    case FormulaKind::And:
    case FormulaKind::Or: {
      int h = 0;
      for (const Formula& c : children()) h = std::max(h, c.horizon());
      return h;
    }
    case FormulaKind::Always:
    case FormulaKind::Eventually:
      return tau2() + child().horizon();
  }
  return 0;
}

bool Formula::structurally_equal(const Formula& other) const {
  if (node_ == other.node_) return true;
  if (kind() != other.kind()) return false;
  switch (kind()) {
    case FormulaKind::Predicate:
      return cmp() == other.cmp() && threshold() == other.threshold() &&
             weight() == other.weight();
    case FormulaKind::Not:
      return child().structurally_equal(other.child());
    case FormulaKind::And:
    case FormulaKind::Or:
      break;
    case FormulaKind::Always:
    case FormulaKind::Eventually:
      if (tau1() != other.tau1() || tau2() != other.tau2()) return false;
      break;
  }
  if (weights() != other.weights()) return false;
  if (children().size() != other.children().size()) return false;
  for (std::size_t i = 0; i < children().size(); ++i)
    if (!children()[i].structurally_equal(other.children()[i])) return false;
  return true;
}

std::string format_number(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

bool all_ones(const std::vector<double>& w) {
  return std::all_of(w.begin(), w.end(), [](double v) { return v == 1.0; });
}

std::string format_vector_annotation(const std::vector<double>& w) {
  std::string out = " {w=[";
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ',';
    out += format_number(w[i]);
  }
  out += "]}";
  return out;
}

std::string format_any(const Formula& f);

// Text usable as the operand of '!' or of a temporal operator.
std::string format_unary(const Formula& f) {
  switch (f.kind()) {
    case FormulaKind::And:
    case FormulaKind::Or:
      return "(" + format_any(f) + ")";
    default:
      return format_any(f);
  }
}

// Text usable as an operand of the connective `parent`; `annotated` marks
// operands that will carry a trailing scalar weight, which must not be
// captured by a nested connective on reparse.
std::string format_operand(const Formula& f, FormulaKind parent, bool annotated) {
  const bool needs_parens =
      f.kind() == parent ||
      (parent == FormulaKind::And && f.kind() == FormulaKind::Or) ||
      (annotated && (f.kind() == FormulaKind::And || f.kind() == FormulaKind::Or));
  return needs_parens ? "(" + format_any(f) + ")" : format_any(f);
}

std::string format_connective(const Formula& f, const char* sep) {
  std::string out;
  const auto& w = f.weights();
  for (std::size_t i = 0; i < f.children().size(); ++i) {
    if (i) out += sep;
    const bool annotated = w[i] != 1.0;
    out += format_operand(f.children()[i], f.kind(), annotated);
    if (annotated) out += " {w=" + format_number(w[i]) + "}";
  }
  return out;
}

std::string format_any(const Formula& f) {
  switch (f.kind()) {
    case FormulaKind::Predicate: {
      std::string out = "(x ";
      out += f.cmp() == Cmp::Ge ? ">=" : "<";
      out += ' ';
      out += format_number(f.threshold());
      if (f.weight() != 1.0) out += " {w=" + format_number(f.weight()) + "}";
      out += ')';
      return out;
    }
    case FormulaKind::Not:
      return "!" + format_unary(f.child());
    case FormulaKind::And:
      return format_connective(f, " & ");
    case FormulaKind::Or:
      return format_connective(f, " | ");
    case FormulaKind::Always:
    case FormulaKind::Eventually: {
      std::string out = f.kind() == FormulaKind::Always ? "G[" : "F[";
      out += std::to_string(f.tau1());
      out += ',';
      out += std::to_string(f.tau2());
      out += ']';
      if (!all_ones(f.weights())) out += format_vector_annotation(f.weights());
      out += ' ';
      out += format_unary(f.child());
      return out;
    }
  }
  return {};
}

}  // namespace

std::string format_formula(const Formula& f) { return format_any(f); }

Formula strip_weights(const Formula& f) {
  switch (f.kind()) {
    case FormulaKind::Predicate:
      return Formula::predicate(f.cmp(), f.threshold(), 1.0);
    case FormulaKind::Not:
      return Formula::negation(strip_weights(f.child()));
    case FormulaKind::And:
    case FormulaKind::Or: {
      std::vector<Formula> kids;
      kids.reserve(f.children().size());
      for (const Formula& c : f.children()) kids.push_back(strip_weights(c));
      return f.kind() == FormulaKind::And ? Formula::conjunction(std::move(kids))
                                          : Formula::disjunction(std::move(kids));
    }
    case FormulaKind::Always:
      return Formula::always(f.tau1(), f.tau2(), strip_weights(f.child()));
    case FormulaKind::Eventually:
      return Formula::eventually(f.tau1(), f.tau2(), strip_weights(f.child()));
  }
  return f;
}

}  // namespace tlnn
