#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tlnn/formula.hpp"
#include "tlnn/rng.hpp"

namespace tlnn {

struct LabeledSample {
  Signal signal;
  int label = 1;            // +1 or -1
  std::string condition;    // optional metadata tag
};

struct Dataset {
  std::vector<LabeledSample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  // Common sample length; throws DataError if empty or ragged.
  std::size_t signal_length() const;
  // Non-empty, uniform length, labels in {-1, +1}.
  void validate() const;
  std::pair<double, double> value_range() const;
};

/* CSV dataset format. Header is "label,x0,x1,..." or
 * "label,condition,x0,x1,..."; one sample per row, labels +1/-1 only,
 * every row the same width. save_csv emits the condition column whenever
 * any sample carries a tag, and writes shortest round-trip decimals so a
 * written file reloads to identical values. */
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& data, const std::string& path);

/* Two-level wavelet packet split with the orthonormal Haar pair. Input
 * length must be a positive multiple of 4. Returns the four leaf bands in
 * frequency order, lowest first, each n/4 long; total energy is preserved
 * exactly up to rounding. */
std::array<Signal, 4> wpt_level2(const Signal& x);

/* Sliding second central moment with the given window, taken over every
 * fully covered position of each band (band length - window + 1 values per
 * band), concatenated in band order. Requires 1 <= window <= band length. */
Signal second_moment_features(std::span<const Signal> bands, int window);

// Block-average resampling to exactly `target` values, 1 <= target <= n.
Signal downsample(const Signal& x, int target);

// wpt_level2 + second_moment_features + downsample for one raw signal.
Signal preprocess_signal(const Signal& x, int moment_window, int target);

/* Preprocesses every sample, then min-max rescales all features to [0, 1]
 * using the dataset-wide extrema. Labels and condition tags carry over. */
Dataset preprocess_dataset(const Dataset& data, int moment_window, int target);

enum class Condition { Inner, Outer, Rolling, Normal };
const char* to_string(Condition c);
Condition condition_from_string(const std::string& s);  // throws ConfigError

// Periodic impulse train of decaying sinusoids, one fault type.
struct FaultModel {
  double impulse_hz = 100.0;  // impulse repetition rate
  double ring_hz = 3000.0;    // ringing frequency excited by each impulse
  double decay = 600.0;       // exponential decay rate, 1/s
  double amplitude = 1.0;
};

struct SynthConfig {
  int length = 1024;
  double sample_rate = 12000.0;
  double noise_sigma = 0.05;
  FaultModel inner{162.0, 5200.0, 600.0, 1.0};
  FaultModel outer{108.0, 3700.0, 600.0, 1.0};
  FaultModel rolling{70.0, 2200.0, 600.0, 1.0};
};

/* Synthetic vibration signals. Fault conditions superpose a jittered
 * impulse train of decaying sinusoids on broadband noise; the normal
 * condition is broadband noise alone. Each sample draws from its own
 * child stream, so sample i is independent of the requested count. */
Signal synth_one(Rng& rng, Condition c, const SynthConfig& cfg);
std::vector<Signal> synth_bearing(Rng& rng, Condition c, int count,
                                  const SynthConfig& cfg);

/* All four conditions, `per_condition` samples each, tagged with their
 * condition. Fault samples are labeled +1, normal samples -1; one-vs-rest
 * tasks relabel at split time. */
Dataset synth_dataset(std::uint64_t seed, int per_condition,
                      const SynthConfig& cfg);

/* One-vs-rest split: the first n_pos_train samples of the target condition
 * train positive and the rest test positive; every other condition
 * contributes its first n_neg_each samples to the training negatives and
 * the next n_neg_each to the testing negatives. Labels are rewritten to
 * +1/-1 against the target. */
std::pair<Dataset, Dataset> one_vs_rest_split(const Dataset& full,
                                              Condition target,
                                              int n_pos_train = 110,
                                              int n_neg_each = 30);

}  // namespace tlnn
