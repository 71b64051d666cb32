#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tlnn/formula.hpp"
#include "tlnn/quantizer.hpp"
#include "tlnn/rng.hpp"

namespace tlnn {

/* Five-layer network whose parameters encode one weighted temporal-logic
 * formula. Layer 1 passes the signal through; layer 2 turns it into one
 * predicate margin per neuron; layer 3 applies one temporal activation per
 * neuron over a learned window; layer 4 combines the neurons once
 * conjunctively and once disjunctively; layer 5 merges those two values.
 * The sign of the output classifies the input. */

enum class NeuronKind { Always, Eventually, AlwaysEventually, EventuallyAlways };
enum class Mode { Soft, Hard };

const char* to_string(NeuronKind k);
NeuronKind neuron_kind_from_string(const std::string& s);

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // row-major, out rows of in columns
  std::vector<double> b;

  double& at(int row, int col) { return w[static_cast<std::size_t>(row) * in + col]; }
  double at(int row, int col) const { return w[static_cast<std::size_t>(row) * in + col]; }
};

// n -> hidden (tanh) -> 2 window coordinates.
struct EncoderParams {
  DenseLayer hidden;
  DenseLayer output;
};

// 2 -> hidden (tanh) -> n non-negative window weights (softplus outside).
struct DecoderParams {
  DenseLayer hidden;
  DenseLayer output;
};

struct NeuronSpec {
  NeuronKind kind = NeuronKind::Always;
  // Span of the outer interval [0, nested_horizon] of the two nested
  // kinds; 0 for the plain kinds.
  int nested_horizon = 0;
  QuantSpec quant;
  EncoderParams encoder;
  DecoderParams decoder;
};

struct TlnnParams {
  int n = 0;  // expected signal length
  std::vector<NeuronSpec> neurons;
  std::vector<double> thresholds;        // predicate threshold per neuron
  std::vector<Cmp> comparisons;          // predicate direction per neuron
  std::vector<std::array<double, 2>> reduction_weights;  // {and, or} per neuron
  std::array<double, 2> output_weights{1.0, 1.0};
  std::uint64_t seed = 0;

  int neuron_count() const { return static_cast<int>(neurons.size()); }
  void validate() const;  // shape and sign invariants, throws ConfigError
};

// Clamped, integer-resolved evaluation window of one neuron.
struct IntervalResolution {
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  bool clamped_lo = false;
  bool clamped_hi = false;
  int t1 = 0;
  int t2 = 0;
};

struct AtomicTrace {
  std::vector<double> enc_hidden;   // encoder tanh activations
  double h1 = 0.0, h2 = 0.0;        // raw encoder outputs
  double q1 = 0.0, q2 = 0.0;        // quantized window coordinates
  IntervalResolution interval;
  std::vector<double> dec_hidden;   // decoder tanh activations
  std::vector<double> dec_pre;      // decoder outputs inside the window
  std::vector<double> window_weights;  // softplus(dec_pre)
  std::vector<double> inner_values;    // nested kinds: one per shift
  std::vector<bool> inner_positive;
  bool outer_positive = false;
  double rho3 = 0.0;
  double margin = 0.0;  // min distance to any branch/clamp/round boundary
};

struct ForwardTrace {
  Mode mode = Mode::Soft;
  int n = 0;
  std::vector<std::vector<double>> rho2;  // one margin row per neuron
  std::vector<AtomicTrace> atoms;
  std::array<double, 2> rho4{0.0, 0.0};
  bool and_positive = false;
  bool or_positive = false;
  double rho5 = 0.0;
  bool out_positive = false;
  double branch_margin = 0.0;
};

struct NeuronGradients {
  EncoderParams encoder;  // same shapes as the parameters
  DecoderParams decoder;
};

struct Gradients {
  std::vector<double> thresholds;
  std::vector<NeuronGradients> neurons;
  std::vector<std::array<double, 2>> reduction_weights;
  std::array<double, 2> output_weights{0.0, 0.0};
};

// Predicate margins: x(t) - threshold for '>=' neurons, threshold - x(t)
// for '<' neurons. One row per neuron.
std::vector<std::vector<double>> layer2_predicates(const Signal& x,
                                                   const TlnnParams& params);

/* Window resolution shared by both modes and by formula extraction:
 * tau_lo = q1 and tau_hi = q1 + q2, clamped so the window (plus the nested
 * shift span) stays inside [0, n-1], then rounded to integer indices. */
IntervalResolution resolve_interval(const NeuronSpec& spec, int n, double q1,
                                    double q2);

// Window weights the decoder assigns to a resolved interval, one value per
// window step.
std::vector<double> decode_window_weights(const NeuronSpec& spec, int n,
                                          const IntervalResolution& r,
                                          std::vector<double>* dec_hidden,
                                          std::vector<double>* dec_pre);

std::pair<double, AtomicTrace> atomic_forward(const NeuronSpec& spec,
                                              std::span<const double> rho2_row,
                                              Mode mode);

struct ReductionResult {
  std::array<double, 2> value{0.0, 0.0};  // {conjunctive, disjunctive}
  bool and_positive = false;
  bool or_positive = false;
};
ReductionResult reduction_forward(std::span<const double> rho3,
                                  std::span<const std::array<double, 2>> w);

struct OutputResult {
  double value = 0.0;
  bool positive = false;
};
OutputResult output_forward(const std::array<double, 2>& rho4,
                            const std::array<double, 2>& w);

std::pair<double, ForwardTrace> forward(const TlnnParams& params,
                                        const Signal& x, Mode mode);

/* Gradient of the squared-error loss 0.5*(y - desired)^2 with respect to
 * every trainable parameter, following the branches recorded in the trace.
 * Requires a soft-mode trace; throws std::invalid_argument otherwise. */
Gradients backward(const ForwardTrace& trace, const TlnnParams& params,
                   double desired);

Gradients zero_gradients(const TlnnParams& params);

NeuronSpec make_neuron(NeuronKind kind, int n, int nested_horizon,
                       int hidden_width, double sharpness, Rng& rng);

/* Fresh single-neuron network: one '>='-type Always neuron, threshold
 * drawn from [data_lo, data_hi], unit reduction and output weights. */
TlnnParams init_params(int n, double data_lo, double data_hi,
                       int nested_horizon, int hidden_width, double sharpness,
                       std::uint64_t seed, Rng& rng);

void set_sharpness(TlnnParams& params, double sharpness);

enum class ParamClass { Unconstrained, NonNegative };

/* Visits every trainable scalar together with its gradient slot in a fixed
 * order. The sole source of truth for "what is trainable". Grads may be
 * const (updates) or mutable (gradient assembly and probing). */
template <typename Grads, typename F>
void for_each_param(TlnnParams& p, Grads& g, F&& f) {
  auto layer = [&f](DenseLayer& lw, auto& lg) {
    for (std::size_t i = 0; i < lw.w.size(); ++i)
      f(lw.w[i], lg.w[i], ParamClass::Unconstrained);
    for (std::size_t i = 0; i < lw.b.size(); ++i)
      f(lw.b[i], lg.b[i], ParamClass::Unconstrained);
  };
  for (std::size_t i = 0; i < p.thresholds.size(); ++i)
    f(p.thresholds[i], g.thresholds[i], ParamClass::Unconstrained);
  for (std::size_t j = 0; j < p.neurons.size(); ++j) {
    layer(p.neurons[j].encoder.hidden, g.neurons[j].encoder.hidden);
    layer(p.neurons[j].encoder.output, g.neurons[j].encoder.output);
    layer(p.neurons[j].decoder.hidden, g.neurons[j].decoder.hidden);
    layer(p.neurons[j].decoder.output, g.neurons[j].decoder.output);
  }
  for (std::size_t j = 0; j < p.reduction_weights.size(); ++j) {
    f(p.reduction_weights[j][0], g.reduction_weights[j][0],
      ParamClass::NonNegative);
    f(p.reduction_weights[j][1], g.reduction_weights[j][1],
      ParamClass::NonNegative);
  }
  f(p.output_weights[0], g.output_weights[0], ParamClass::NonNegative);
  f(p.output_weights[1], g.output_weights[1], ParamClass::NonNegative);
}

/* Checkpoints are self-describing JSON holding n, the neuron roster, every
 * parameter array, the quantizer specs and the seed. Doubles are written
 * with full precision, so load(save(p)) reproduces p bit-exactly. */
std::string checkpoint_to_string(const TlnnParams& params);
TlnnParams checkpoint_from_string(const std::string& text);
void save_checkpoint(const TlnnParams& params, const std::string& path);
TlnnParams load_checkpoint(const std::string& path);

}  // namespace tlnn
