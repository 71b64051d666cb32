#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tlnn/errors.hpp"
#include "tlnn/extraction.hpp"
#include "tlnn/network.hpp"
#include "tlnn/parser.hpp"
#include "tlnn/semantics.hpp"

#include "test_util.hpp"

using namespace tlnn;

namespace {

constexpr NeuronKind kKinds[4] = {
    NeuronKind::Always, NeuronKind::Eventually, NeuronKind::AlwaysEventually,
    NeuronKind::EventuallyAlways};

// One neuron of each kind with randomized thresholds and gate weights.
TlnnParams four_kind_params(Rng& rng, int n = 12, int nested = 2) {
  TlnnParams p = init_params(n, -1.0, 1.0, nested, 4, 50.0, 0, rng);
  p.neurons.clear();
  p.thresholds.clear();
  p.comparisons.clear();
  p.reduction_weights.clear();
  for (NeuronKind k : kKinds) {
    p.neurons.push_back(make_neuron(k, n, nested, 4, 50.0, rng));
    p.thresholds.push_back(rng.uniform(-0.5, 0.5));
    p.comparisons.push_back(rng.coin() ? Cmp::Ge : Cmp::Lt);
    p.reduction_weights.push_back(
        {rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5)});
  }
  p.output_weights = {rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5)};
  return p;
}

void pin_layer(DenseLayer& l, const std::vector<double>& bias) {
  std::fill(l.w.begin(), l.w.end(), 0.0);
  l.b = bias;
}

// Encoder that ignores its input and always reports the given raw window.
void pin_encoder(NeuronSpec& s, double h1, double h2) {
  pin_layer(s.encoder.hidden,
            std::vector<double>(s.encoder.hidden.b.size(), 0.0));
  pin_layer(s.encoder.output, {h1, h2});
}

Dataset one_sample(const Signal& sig) {
  Dataset d;
  d.samples.push_back({sig, 1, ""});
  return d;
}

}  // namespace

TEST_CASE("the extracted formula replays the hard forward pass exactly") {
  Rng rng(101);
  for (int rep = 0; rep < 25; ++rep) {
    TlnnParams p = four_kind_params(rng);
    const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
    const Formula f = extract_formula(p, one_sample(sig));
    CHECK(f.horizon() <= 11);
    const auto [y, trace] = forward(p, sig, Mode::Hard);
    const double replay = robustness_weighted(f, sig, 0);
    CHECK(std::abs(replay - y) <= 1e-12);
  }
}

TEST_CASE("single-neuron groups fold their gate weight into the root") {
  Rng rng(103);
  TlnnParams p = init_params(12, -1.0, 1.0, 0, 4, 50.0, 0, rng);
  p.thresholds[0] = 0.25;
  p.comparisons[0] = Cmp::Lt;
  p.reduction_weights[0] = {0.4, 0.9};
  p.output_weights = {0.7, 1.3};
  const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);

  const Formula f = extract_formula(p, one_sample(sig));
  REQUIRE(f.kind() == FormulaKind::And);
  REQUIRE(f.children().size() == 2);
  CHECK(f.weights()[0] == 0.7 * 0.4);
  CHECK(f.weights()[1] == 1.3 * 0.9);
  CHECK(f.children()[0].structurally_equal(f.children()[1]));

  const Formula& atom = f.children()[0];
  REQUIRE(atom.is_temporal());
  const Formula& pred = atom.child();
  REQUIRE(pred.kind() == FormulaKind::Predicate);
  CHECK(pred.threshold() == 0.25);
  CHECK(pred.cmp() == Cmp::Lt);
  CHECK(pred.weight() == 2.0);

  const auto [y, trace] = forward(p, sig, Mode::Hard);
  CHECK(std::abs(robustness_weighted(f, sig, 0) - y) <= 1e-12);
}

TEST_CASE("multi-member groups keep the raw output gate weights") {
  Rng rng(105);
  TlnnParams p = four_kind_params(rng);
  p.output_weights = {0.6, 1.1};
  const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
  const Formula f = extract_formula(p, one_sample(sig));
  REQUIRE(f.kind() == FormulaKind::And);
  REQUIRE(f.children().size() == 2);
  CHECK(f.weights() == std::vector<double>{0.6, 1.1});
  CHECK(f.children()[0].kind() == FormulaKind::And);
  CHECK(f.children()[1].kind() == FormulaKind::Or);
  CHECK(f.children()[0].children().size() == 4);
  CHECK(f.children()[1].children().size() == 4);
}

TEST_CASE("a silent gate column leaves only the other group") {
  Rng rng(107);

  SUBCASE("conjunction only, several members") {
    TlnnParams p = four_kind_params(rng);
    for (auto& w : p.reduction_weights) w[1] = 0.0;
    const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
    const Formula f = extract_formula(p, one_sample(sig));
    REQUIRE(f.kind() == FormulaKind::And);
    CHECK(f.children().size() == 4);
    for (int rep = 0; rep < 100; ++rep) {
      const Signal x = test::random_signal(rng, 12, -1.0, 1.0);
      const auto [y, trace] = forward(p, x, Mode::Hard);
      CHECK((robustness_weighted(f, x, 0) >= 0.0) == (y >= 0.0));
    }
  }
  SUBCASE("disjunction only, several members") {
    TlnnParams p = four_kind_params(rng);
    for (auto& w : p.reduction_weights) w[0] = 0.0;
    const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
    const Formula f = extract_formula(p, one_sample(sig));
    REQUIRE(f.kind() == FormulaKind::Or);
    CHECK(f.children().size() == 4);
    for (int rep = 0; rep < 100; ++rep) {
      const Signal x = test::random_signal(rng, 12, -1.0, 1.0);
      const auto [y, trace] = forward(p, x, Mode::Hard);
      CHECK((robustness_weighted(f, x, 0) >= 0.0) == (y >= 0.0));
    }
  }
  SUBCASE("a lone atom stands alone") {
    TlnnParams p = init_params(12, -1.0, 1.0, 0, 4, 50.0, 0, rng);
    p.reduction_weights[0] = {0.8, 0.0};
    const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
    const Formula f = extract_formula(p, one_sample(sig));
    CHECK(f.is_temporal());
    for (int rep = 0; rep < 100; ++rep) {
      const Signal x = test::random_signal(rng, 12, -1.0, 1.0);
      const auto [y, trace] = forward(p, x, Mode::Hard);
      CHECK((robustness_weighted(f, x, 0) >= 0.0) == (y >= 0.0));
    }
  }
  SUBCASE("a neuron with both entries zero is skipped") {
    TlnnParams p = four_kind_params(rng);
    p.reduction_weights[2] = {0.0, 0.0};
    const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
    const Formula f = extract_formula(p, one_sample(sig));
    REQUIRE(f.kind() == FormulaKind::And);
    CHECK(f.children()[0].children().size() == 3);
    CHECK(f.children()[1].children().size() == 3);
  }
}

TEST_CASE("extraction failure modes raise typed errors") {
  Rng rng(109);
  TlnnParams p = four_kind_params(rng);
  const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);

  Dataset empty;
  CHECK_THROWS_AS(extract_formula(p, empty), DataError);

  Dataset wrong;
  wrong.samples.push_back({test::random_signal(rng, 9, -1.0, 1.0), 1, ""});
  CHECK_THROWS_AS(extract_formula(p, wrong), DataError);

  for (auto& w : p.reduction_weights) w = {0.0, 0.0};
  CHECK_THROWS_WITH_AS(extract_formula(p, one_sample(sig)),
                       "all reduction weights are zero; no formula is encoded",
                       FormulaError);
}

TEST_CASE("every neuron kind maps to its operator template") {
  Rng rng(111);
  TlnnParams p = four_kind_params(rng);
  for (std::size_t j = 0; j < p.neurons.size(); ++j) {
    pin_encoder(p.neurons[j], 3.2, 1.9);
    p.reduction_weights[j] = {1.0, 0.0};
  }
  const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
  const Formula f = extract_formula(p, one_sample(sig));
  REQUIRE(f.kind() == FormulaKind::And);
  REQUIRE(f.children().size() == 4);

  const Formula& ga = f.children()[0];
  CHECK(ga.kind() == FormulaKind::Always);
  CHECK(ga.tau1() == 3);
  CHECK(ga.tau2() == 5);
  CHECK(ga.child().kind() == FormulaKind::Predicate);

  const Formula& gf = f.children()[1];
  CHECK(gf.kind() == FormulaKind::Eventually);
  CHECK(gf.tau1() == 3);
  CHECK(gf.tau2() == 5);

  const Formula& gae = f.children()[2];
  CHECK(gae.kind() == FormulaKind::Always);
  CHECK(gae.tau1() == 0);
  CHECK(gae.tau2() == 2);
  REQUIRE(gae.child().kind() == FormulaKind::Eventually);
  CHECK(gae.child().tau1() == 3);
  CHECK(gae.child().tau2() == 5);
  CHECK(gae.child().child().kind() == FormulaKind::Predicate);

  const Formula& gea = f.children()[3];
  CHECK(gea.kind() == FormulaKind::Eventually);
  CHECK(gea.tau1() == 0);
  CHECK(gea.tau2() == 2);
  REQUIRE(gea.child().kind() == FormulaKind::Always);
  CHECK(gea.child().tau1() == 3);
  CHECK(gea.child().tau2() == 5);
}

TEST_CASE("calibration averages the raw window coordinates") {
  // Two samples steer the encoder to different raw outputs; the extracted
  // window follows the mean, not either sample.
  Rng rng(113);
  TlnnParams p = init_params(12, -1.0, 1.0, 0, 4, 50.0, 0, rng);
  NeuronSpec& s = p.neurons[0];
  pin_layer(s.encoder.hidden, std::vector<double>(s.encoder.hidden.b.size(), 0.0));
  // First hidden unit passes tanh(sum of inputs * 0.1) through.
  for (int i = 0; i < s.encoder.hidden.in; ++i) s.encoder.hidden.w[i] = 0.1;
  std::fill(s.encoder.output.w.begin(), s.encoder.output.w.end(), 0.0);
  s.encoder.output.w[0] = 4.0;  // h1 responds to the signal level
  s.encoder.output.b = {2.0, 1.5};
  p.thresholds[0] = 0.0;

  Dataset cal;
  cal.samples.push_back(
      {Signal{std::vector<double>(12, 0.8), 1.0}, 1, ""});
  cal.samples.push_back(
      {Signal{std::vector<double>(12, -0.8), 1.0}, -1, ""});
  const Formula f = extract_formula(p, cal);
  // Opposite signals cancel in the mean: tau_lo quantizes from h1 = 2.0.
  REQUIRE(f.kind() == FormulaKind::And);
  const Formula& atom = f.children()[0];
  const double step = p.neurons[0].quant.step();
  const int expected_lo =
      static_cast<int>(std::lround(std::round(2.0 / step) * step));
  CHECK(atom.tau1() == expected_lo);
}

TEST_CASE("region summaries walk the temporal operators in order") {
  const Formula pred = Formula::predicate(Cmp::Ge, 0.7, 2.0);
  const Formula inner = Formula::eventually(3, 5, pred);
  const Formula outer = Formula::always(0, 5, inner);
  const Formula other =
      Formula::always(2, 4, Formula::predicate(Cmp::Lt, -0.25, 1.0));
  const Formula f = Formula::conjunction({outer, other}, {1.0, 1.0});

  const std::vector<Region> regions = formula_regions(f);
  REQUIRE(regions.size() == 3);
  CHECK(regions[0].tau1 == 0);
  CHECK(regions[0].tau2 == 5);
  CHECK(regions[0].threshold == 0.7);
  CHECK(regions[0].cmp == Cmp::Ge);
  CHECK(regions[1].tau1 == 3);
  CHECK(regions[1].tau2 == 5);
  CHECK(regions[2].tau1 == 2);
  CHECK(regions[2].tau2 == 4);
  CHECK(regions[2].threshold == -0.25);
  CHECK(regions[2].cmp == Cmp::Lt);

  CHECK(formula_regions(pred).empty());

  // Nested kinds contribute two rows each and shared atoms appear once per
  // group: all four kinds in both groups give twelve, in one group six.
  Rng rng(115);
  TlnnParams p = four_kind_params(rng);
  const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
  CHECK(formula_regions(extract_formula(p, one_sample(sig))).size() == 12);
  for (auto& w : p.reduction_weights) w[1] = 0.0;
  CHECK(formula_regions(extract_formula(p, one_sample(sig))).size() == 6);
}

TEST_CASE("region tables land in CSV form") {
  const std::vector<Region> regions = {{0, 5, 0.7, Cmp::Ge},
                                       {3, 5, -0.25, Cmp::Lt}};
  const std::string path = "/tmp/tlnn_regions_test.csv";
  write_regions_csv(regions, path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() ==
        "tau1,tau2,threshold,comparison\n"
        "0,5,0.7,>=\n"
        "3,5,-0.25,<\n");
  std::remove(path.c_str());

  CHECK_THROWS_AS(write_regions_csv(regions, "/nonexistent/dir/r.csv"),
                  IoError);
}

TEST_CASE("display simplification trims featherweight operands") {
  const Formula p1 = Formula::predicate(Cmp::Ge, 0.1, 1.0);
  const Formula p2 = Formula::predicate(Cmp::Lt, 0.9, 1.0);
  const Formula p3 = Formula::predicate(Cmp::Ge, 0.5, 1.0);

  SUBCASE("a light operand drops and the survivor unwraps") {
    const Formula f = Formula::conjunction({p1, p2}, {1.0, 1e-6});
    CHECK(display_simplify(f).structurally_equal(p1));
  }
  SUBCASE("weights at the cutoff survive") {
    const Formula f = Formula::conjunction({p1, p2}, {1e-3, 1.0});
    CHECK(display_simplify(f).structurally_equal(f));
  }
  SUBCASE("two survivors keep the connective and their weights") {
    const Formula f = Formula::disjunction({p1, p2, p3}, {0.8, 1e-9, 0.6});
    const Formula s = display_simplify(f);
    REQUIRE(s.kind() == FormulaKind::Or);
    REQUIRE(s.children().size() == 2);
    CHECK(s.weights() == std::vector<double>{0.8, 0.6});
    CHECK(s.children()[0].structurally_equal(p1));
    CHECK(s.children()[1].structurally_equal(p3));
  }
  SUBCASE("an empty root comes back unchanged") {
    const Formula f = Formula::conjunction({p1, p2}, {1e-9, 1e-8});
    CHECK(display_simplify(f).structurally_equal(f));
  }
  SUBCASE("temporal wrappers follow their child") {
    const Formula inner = Formula::conjunction({p1, p2}, {1.0, 1e-9});
    const Formula f = Formula::always(0, 2, inner);
    const Formula s = display_simplify(f);
    REQUIRE(s.kind() == FormulaKind::Always);
    CHECK(s.weights() == f.weights());
    CHECK(s.child().structurally_equal(p1));
  }
  SUBCASE("a vanished branch takes its wrapper with it") {
    const Formula dead =
        Formula::always(0, 1, Formula::conjunction({p1, p2}, {1e-9, 1e-9}));
    const Formula f = Formula::conjunction({dead, p3}, {1.0, 1.0});
    CHECK(display_simplify(f).structurally_equal(p3));
  }
  SUBCASE("negations propagate the drop") {
    const Formula dead =
        Formula::negation(Formula::conjunction({p1, p2}, {1e-9, 1e-9}));
    const Formula f = Formula::disjunction({dead, p3}, {1.0, 1.0});
    CHECK(display_simplify(f).structurally_equal(p3));
    CHECK(display_simplify(dead).structurally_equal(dead));
  }
  SUBCASE("a clean formula passes through whole") {
    const Formula f = Formula::always(
        0, 3, Formula::disjunction({p1, p3}, {1.0, 0.5}), {1.0, 2.0, 1.0, 0.5});
    CHECK(display_simplify(f).structurally_equal(f));
  }
}

TEST_CASE("extracted text reparses to the same structure") {
  Rng rng(117);
  for (int rep = 0; rep < 10; ++rep) {
    TlnnParams p = four_kind_params(rng);
    const Signal sig = test::random_signal(rng, 12, -1.0, 1.0);
    const Formula f = extract_formula(p, one_sample(sig));
    const Formula back = parse_formula(format_formula(f));
    CHECK(back.structurally_equal(f));
  }
}
