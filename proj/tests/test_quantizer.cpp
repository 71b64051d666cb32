#include <doctest.h>

#include <cmath>

#include "tlnn/errors.hpp"
#include "tlnn/quantizer.hpp"

using namespace tlnn;

TEST_CASE("hard quantization rounds onto the grid and clamps") {
  const QuantSpec q{0.0, 7.0, 3, 10.0};
  CHECK(q.step() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(quantize_hard(3.4, q) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(quantize_hard(3.6, q) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(quantize_hard(-2.0, q) == 0.0);
  CHECK(quantize_hard(9.5, q) == 7.0);
  CHECK(quantize_hard(0.0, q) == 0.0);
  CHECK(quantize_hard(7.0, q) == 7.0);

  const QuantSpec half{0.0, 1.0, 2, 10.0};
  CHECK(half.step() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("index grids span the window coordinate range") {
  const QuantSpec q2 = QuantSpec::for_index_range(2, 5.0);
  CHECK(q2.lower == 0.0);
  CHECK(q2.upper == 1.0);
  CHECK(q2.bits == 1);
  CHECK(q2.sharpness == 5.0);
  CHECK(QuantSpec::for_index_range(3, 5.0).bits == 2);
  CHECK(QuantSpec::for_index_range(128, 5.0).bits == 7);
  CHECK(QuantSpec::for_index_range(129, 5.0).bits == 8);
  // Integer grid: the step is exactly 1 so hard values are integers.
  const QuantSpec q = QuantSpec::for_index_range(128, 5.0);
  CHECK(q.step() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(quantize_hard(63.49, q) == 63.0);
}

TEST_CASE("invalid quantizer settings are rejected") {
  CHECK_THROWS_AS((QuantSpec{1.0, 1.0, 3, 10.0}.validate()), ConfigError);
  CHECK_THROWS_AS((QuantSpec{2.0, 1.0, 3, 10.0}.validate()), ConfigError);
  CHECK_THROWS_AS((QuantSpec{0.0, 1.0, 0, 10.0}.validate()), ConfigError);
  CHECK_THROWS_AS((QuantSpec{0.0, 1.0, 53, 10.0}.validate()), ConfigError);
  CHECK_THROWS_AS((QuantSpec{0.0, 1.0, 3, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((QuantSpec{0.0, 1.0, 3, -1.0}.validate()), ConfigError);
  CHECK_THROWS_AS(QuantSpec::for_index_range(1, 5.0), ConfigError);
  CHECK_NOTHROW(QuantSpec::for_index_range(2, 5.0).validate());
}

TEST_CASE("soft quantization saturates outside the range") {
  const QuantSpec q{0.0, 7.0, 3, 10.0};
  CHECK(quantize_soft(-3.0, q) == 0.0);
  CHECK(quantize_soft(7.5, q) == 7.0);
  CHECK(quantize_soft_grad(-3.0, q) == 0.0);
  CHECK(quantize_soft_grad(7.5, q) == 0.0);
  CHECK(quantize_soft_grad(0.0, q) == 0.0);  // exact cell edge
  CHECK(quantize_soft_grad(3.0, q) == 0.0);
}

TEST_CASE("cell midpoints and edges map to exact soft values") {
  const QuantSpec q{0.0, 7.0, 3, 1.0};
  // Transition center: halfway up the step.
  CHECK(quantize_soft(3.5, q) == doctest::Approx(3.5).epsilon(1e-12));
  // Known slope at the transition center for unit step and sharpness.
  CHECK(quantize_soft_grad(3.5, q) ==
        doctest::Approx(1.0819767068693265).epsilon(1e-12));
}

TEST_CASE("sharpening drives the soft staircase onto the hard one") {
  const QuantSpec base{0.0, 7.0, 3, 1.0};
  for (double h = 0.06; h < 7.0; h += 0.13) {
    // Skip the neighborhoods of the rounding switches.
    const double frac = h - std::floor(h);
    if (std::abs(frac - 0.5) < 0.05) continue;
    double prev_err = 1e9;
    for (double k : {10.0, 100.0, 1000.0}) {
      QuantSpec q = base;
      q.sharpness = k;
      const double err = std::abs(quantize_soft(h, q) - quantize_hard(h, q));
      CHECK(err <= prev_err + 1e-12);
      prev_err = err;
    }
    CHECK(prev_err < 1e-3);
  }
}

TEST_CASE("soft quantization is monotone") {
  const QuantSpec q{0.0, 7.0, 3, 1000.0};
  double prev = -1.0;
  for (double h = -0.5; h <= 7.5; h += 0.01) {
    const double v = quantize_soft(h, q);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("soft gradient matches central finite differences") {
  const QuantSpec q{0.0, 7.0, 3, 4.0};
  const double eps = 1e-6;
  for (double h = 0.03; h < 7.0; h += 0.071) {
    const double frac = h - std::floor(h);
    // The derivative is defined inside cells; stay off the edges.
    if (frac < 0.01 || frac > 0.99) continue;
    const double g = quantize_soft_grad(h, q);
    const double fd =
        (quantize_soft(h + eps, q) - quantize_soft(h - eps, q)) / (2 * eps);
    CHECK(std::abs(g - fd) / std::max(1.0, std::abs(g)) < 1e-5);
  }
}

TEST_CASE("soft and hard staircases agree at representable values") {
  const QuantSpec q{0.0, 7.0, 3, 50.0};
  for (int i = 0; i <= 7; ++i) {
    const double h = static_cast<double>(i);
    CHECK(quantize_hard(h, q) == h);
    CHECK(quantize_soft(h, q) == doctest::Approx(h).epsilon(1e-9));
  }
}
