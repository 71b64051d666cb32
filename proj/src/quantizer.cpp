#include "tlnn/quantizer.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "tlnn/errors.hpp"

namespace tlnn {

double QuantSpec::step() const {
  return (upper - lower) / (std::ldexp(1.0, bits) - 1.0);
}

void QuantSpec::validate() const {
  if (!std::isfinite(lower) || !std::isfinite(upper) || lower >= upper)
    throw ConfigError("quantizer bounds must satisfy lower < upper");
  if (bits < 1 || bits > 52)
    throw ConfigError("quantizer bit width must be in [1, 52]");
  if (!std::isfinite(sharpness) || sharpness <= 0.0)
    throw ConfigError("quantizer sharpness must be positive");
}

QuantSpec QuantSpec::for_index_range(int n, double sharpness) {
  if (n < 2) throw ConfigError("index grid needs a signal of length >= 2");
  QuantSpec s;
  s.lower = 0.0;
  s.upper = static_cast<double>(n - 1);
  s.bits = static_cast<int>(std::bit_width(static_cast<unsigned>(n - 1)));
  s.sharpness = sharpness;
  s.validate();
  return s;
}

double quantize_hard(double h, const QuantSpec& spec) {
  if (h <= spec.lower) return spec.lower;
  if (h >= spec.upper) return spec.upper;
  const double d = spec.step();
  return spec.lower + std::round((h - spec.lower) / d) * d;
}

namespace {

// Grid cell index of h, capped at the last full cell.
double cell_index(double off, double d, int bits) {
  double i = std::floor(off / d);
  const double last = std::ldexp(1.0, bits) - 2.0;
  return i > last ? last : i;
}

}  // namespace

double quantize_soft(double h, const QuantSpec& spec) {
  if (h <= spec.lower) return spec.lower;
  if (h >= spec.upper) return spec.upper;
  const double d = spec.step();
  const double off = h - spec.lower;
  const double i = cell_index(off, d, spec.bits);
  const double frac = off - i * d;
  const double kappa = std::tanh(spec.sharpness * (frac - 0.5 * d)) /
                       std::tanh(0.5 * spec.sharpness * d);
  return spec.lower + d * (i + 0.5 * (kappa + 1.0));
}

double quantize_soft_grad(double h, const QuantSpec& spec) {
  if (h <= spec.lower || h >= spec.upper) return 0.0;
  const double d = spec.step();
  const double off = h - spec.lower;
  const double i = cell_index(off, d, spec.bits);
  const double frac = off - i * d;
  if (frac == 0.0) return 0.0;  // documented cell-boundary convention
  const double th = std::tanh(spec.sharpness * (frac - 0.5 * d));
  return 0.5 * d * spec.sharpness * (1.0 - th * th) /
         std::tanh(0.5 * spec.sharpness * d);
}

}  // namespace tlnn
