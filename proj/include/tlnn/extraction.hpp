#pragma once

#include <string>
#include <vector>

#include "tlnn/formula.hpp"
#include "tlnn/network.hpp"
#include "tlnn/signals.hpp"

namespace tlnn {

/* Reads the formula a trained network encodes. Window coordinates are the
 * mean raw encoder outputs over the calibration set, quantized hard and
 * resolved exactly as the forward pass resolves them, so the formula's
 * weighted robustness reproduces the network output. */
Formula extract_formula(const TlnnParams& params, const Dataset& calibration);

// Flat per-window summary of a formula, one row per temporal operator.
struct Region {
  int tau1 = 0;
  int tau2 = 0;
  double threshold = 0.0;  // first predicate under the operator
  Cmp cmp = Cmp::Ge;
};

std::vector<Region> formula_regions(const Formula& f);

void write_regions_csv(const std::vector<Region>& regions,
                       const std::string& path);

/* Display form: drops operands whose weight is below min_weight and
 * unwraps single-operand connectives. Changes the value, not the sign, of
 * well-separated formulas; used only for presentation. */
Formula display_simplify(const Formula& f, double min_weight = 1e-3);

}  // namespace tlnn
