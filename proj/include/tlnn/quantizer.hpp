#pragma once

namespace tlnn {

/* Uniform quantization grid over [lower, upper] with 2^bits levels, so the
 * step is (upper - lower) / (2^bits - 1). sharpness controls how closely
 * the soft version hugs the staircase. */
struct QuantSpec {
  double lower = 0.0;
  double upper = 1.0;
  int bits = 1;
  double sharpness = 10.0;

  double step() const;
  void validate() const;  // throws ConfigError

  // Grid over sample indices 0..n-1 with just enough bits to reach n-1.
  static QuantSpec for_index_range(int n, double sharpness);
};

// Nearest grid point, saturating at the range ends.
double quantize_hard(double h, const QuantSpec& spec);

/* Differentiable surrogate: within grid cell i the value sweeps from one
 * grid point to the next through a tanh ramp centered on the cell midpoint;
 * outside [lower, upper] it saturates. Increasing sharpness converges to
 * quantize_hard away from the step locations. Monotone in h. */
double quantize_soft(double h, const QuantSpec& spec);

/* Analytic derivative of quantize_soft. Zero outside [lower, upper]; at
 * an exact cell boundary the convention is to return 0. */
double quantize_soft_grad(double h, const QuantSpec& spec);

}  // namespace tlnn
