#include "tlnn/extraction.hpp"

#include <fstream>
#include <optional>
#include <utility>

#include "tlnn/errors.hpp"

namespace tlnn {

namespace {

// The formula predicate carries weight 2 so that (w/2)(x - c) = x - c,
// matching the network's raw threshold margins exactly.
constexpr double kPredicateWeight = 2.0;

Formula neuron_atom(const TlnnParams& params, std::size_t j,
                    const Dataset& calibration) {
  const NeuronSpec& spec = params.neurons[j];
  const int n = params.n;

  double h1 = 0.0, h2 = 0.0;
  for (const LabeledSample& s : calibration.samples) {
    if (s.signal.size() != static_cast<std::size_t>(n))
      throw DataError("calibration signal length " +
                      std::to_string(s.signal.size()) +
                      " does not match the network input length " +
                      std::to_string(n));
    std::vector<double> rho2(s.signal.size());
    const double c = params.thresholds[j];
    if (params.comparisons[j] == Cmp::Ge) {
      for (std::size_t t = 0; t < rho2.size(); ++t) rho2[t] = s.signal[t] - c;
    } else {
      for (std::size_t t = 0; t < rho2.size(); ++t) rho2[t] = c - s.signal[t];
    }
    const auto [v, at] = atomic_forward(spec, rho2, Mode::Hard);
    h1 += at.h1;
    h2 += at.h2;
  }
  const double count = static_cast<double>(calibration.size());
  const double q1 = quantize_hard(h1 / count, spec.quant);
  const double q2 = quantize_hard(h2 / count, spec.quant);
  const IntervalResolution r = resolve_interval(spec, n, q1, q2);
  const std::vector<double> weights =
      decode_window_weights(spec, n, r, nullptr, nullptr);

  const Formula pred = Formula::predicate(
      params.comparisons[j], params.thresholds[j], kPredicateWeight);
  switch (spec.kind) {
    case NeuronKind::Always:
      return Formula::always(r.t1, r.t2, pred, weights);
    case NeuronKind::Eventually:
      return Formula::eventually(r.t1, r.t2, pred, weights);
    case NeuronKind::AlwaysEventually:
      return Formula::always(0, spec.nested_horizon,
                             Formula::eventually(r.t1, r.t2, pred, weights));
    case NeuronKind::EventuallyAlways:
      return Formula::eventually(0, spec.nested_horizon,
                                 Formula::always(r.t1, r.t2, pred, weights));
  }
  throw FormulaError("unknown neuron kind");
}

struct Group {
  Formula formula;
  double carry = 1.0;  // weight the group contributes at the output gate
};

std::optional<Group> build_group(std::vector<Formula> atoms,
                                 std::vector<double> weights, bool conjunction) {
  if (atoms.empty()) return std::nullopt;
  if (atoms.size() == 1) return Group{std::move(atoms.front()), weights.front()};
  Formula f = conjunction
                  ? Formula::conjunction(std::move(atoms), std::move(weights))
                  : Formula::disjunction(std::move(atoms), std::move(weights));
  return Group{std::move(f), 1.0};
}

}  // namespace

Formula extract_formula(const TlnnParams& params, const Dataset& calibration) {
  params.validate();
  if (calibration.empty()) throw DataError("calibration set is empty");

  std::vector<Formula> and_atoms, or_atoms;
  std::vector<double> and_weights, or_weights;
  for (std::size_t j = 0; j < params.neurons.size(); ++j) {
    const auto& w = params.reduction_weights[j];
    if (w[0] <= 0.0 && w[1] <= 0.0) continue;
    const Formula atom = neuron_atom(params, j, calibration);
    if (w[0] > 0.0) {
      and_atoms.push_back(atom);
      and_weights.push_back(w[0]);
    }
    if (w[1] > 0.0) {
      or_atoms.push_back(atom);
      or_weights.push_back(w[1]);
    }
  }
  std::optional<Group> ga =
      build_group(std::move(and_atoms), std::move(and_weights), true);
  std::optional<Group> go =
      build_group(std::move(or_atoms), std::move(or_weights), false);
  if (ga && go)
    return Formula::conjunction(
        {ga->formula, go->formula},
        {params.output_weights[0] * ga->carry,
         params.output_weights[1] * go->carry});
  if (ga) return ga->formula;
  if (go) return go->formula;
  throw FormulaError("all reduction weights are zero; no formula is encoded");
}

namespace {

const Formula* first_predicate(const Formula& f) {
  if (f.kind() == FormulaKind::Predicate) return &f;
  for (const Formula& c : f.children())
    if (const Formula* p = first_predicate(c)) return p;
  return nullptr;
}

void collect_regions(const Formula& f, std::vector<Region>& out) {
  if (f.is_temporal()) {
    Region r;
    r.tau1 = f.tau1();
    r.tau2 = f.tau2();
    if (const Formula* p = first_predicate(f)) {
      r.threshold = p->threshold();
      r.cmp = p->cmp();
    }
    out.push_back(r);
  }
  for (const Formula& c : f.children()) collect_regions(c, out);
}

}  // namespace

std::vector<Region> formula_regions(const Formula& f) {
  std::vector<Region> out;
  collect_regions(f, out);
  return out;
}

void write_regions_csv(const std::vector<Region>& regions,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "tau1,tau2,threshold,comparison\n";
  for (const Region& r : regions)
    out << r.tau1 << ',' << r.tau2 << ',' << format_number(r.threshold) << ','
        << (r.cmp == Cmp::Ge ? ">=" : "<") << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

namespace {

std::optional<Formula> simplify_rec(const Formula& f, double min_weight) {
  switch (f.kind()) {
    case FormulaKind::Predicate:
      return f;
    case FormulaKind::Not: {
      auto c = simplify_rec(f.child(), min_weight);
      if (!c) return std::nullopt;
      return Formula::negation(*c);
    }
    case FormulaKind::Always:
    case FormulaKind::Eventually: {
      auto c = simplify_rec(f.child(), min_weight);
      if (!c) return std::nullopt;
      return f.kind() == FormulaKind::Always
                 ? Formula::always(f.tau1(), f.tau2(), *c, f.weights())
                 : Formula::eventually(f.tau1(), f.tau2(), *c, f.weights());
    }
    case FormulaKind::And:
    case FormulaKind::Or: {
      std::vector<Formula> kept;
      std::vector<double> weights;
      for (std::size_t i = 0; i < f.children().size(); ++i) {
        if (f.weights()[i] < min_weight) continue;
        auto c = simplify_rec(f.children()[i], min_weight);
        if (!c) continue;
        kept.push_back(std::move(*c));
        weights.push_back(f.weights()[i]);
      }
      if (kept.empty()) return std::nullopt;
      if (kept.size() == 1) return std::move(kept.front());
      return f.kind() == FormulaKind::And
                 ? Formula::conjunction(std::move(kept), std::move(weights))
                 : Formula::disjunction(std::move(kept), std::move(weights));
    }
  }
  return f;
}

}  // namespace

Formula display_simplify(const Formula& f, double min_weight) {
  auto r = simplify_rec(f, min_weight);
  return r ? *r : f;
}

}  // namespace tlnn
