#include "tlnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tlnn/errors.hpp"
#include "tlnn/robust_ops.hpp"

namespace tlnn {

const char* to_string(NeuronKind k) {
  switch (k) {
    case NeuronKind::Always: return "always";
    case NeuronKind::Eventually: return "eventually";
    case NeuronKind::AlwaysEventually: return "always_eventually";
    case NeuronKind::EventuallyAlways: return "eventually_always";
  }
  return "?";
}

NeuronKind neuron_kind_from_string(const std::string& s) {
  if (s == "always") return NeuronKind::Always;
  if (s == "eventually") return NeuronKind::Eventually;
  if (s == "always_eventually") return NeuronKind::AlwaysEventually;
  if (s == "eventually_always") return NeuronKind::EventuallyAlways;
  throw ConfigError("unknown neuron kind '" + s + "'");
}

namespace {

bool is_nested(NeuronKind k) {
  return k == NeuronKind::AlwaysEventually || k == NeuronKind::EventuallyAlways;
}

std::vector<double> affine(const DenseLayer& l, std::span<const double> in) {
  std::vector<double> out(static_cast<std::size_t>(l.out));
  for (int r = 0; r < l.out; ++r) {
    double z = l.b[static_cast<std::size_t>(r)];
    const double* row = l.w.data() + static_cast<std::size_t>(r) * l.in;
    for (int c = 0; c < l.in; ++c) z += row[c] * in[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = z;
  }
  return out;
}

void tanh_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::tanh(x);
}

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_layer(const DenseLayer& l, int in, int out, const char* what) {
  if (l.in != in || l.out != out ||
      l.w.size() != static_cast<std::size_t>(in) * static_cast<std::size_t>(out) ||
      l.b.size() != static_cast<std::size_t>(out))
    throw ConfigError(std::string(what) + " layer has inconsistent shape");
}

}  // namespace

void TlnnParams::validate() const {
  if (n < 2) throw ConfigError("network needs signal length >= 2");
  const std::size_t m = neurons.size();
  if (m == 0) throw ConfigError("network needs at least one neuron");
  if (thresholds.size() != m || comparisons.size() != m ||
      reduction_weights.size() != m)
    throw ConfigError("per-neuron arrays have mismatched sizes");
  for (const auto& w : reduction_weights)
    for (double v : w)
      if (!std::isfinite(v) || v < 0.0)
        throw ConfigError("reduction weights must be finite and >= 0");
  for (double v : output_weights)
    if (!std::isfinite(v) || v < 0.0)
      throw ConfigError("output weights must be finite and >= 0");
  for (double v : thresholds)
    if (!std::isfinite(v)) throw ConfigError("thresholds must be finite");
  for (const NeuronSpec& s : neurons) {
    if (is_nested(s.kind)) {
      if (s.nested_horizon < 0 || s.nested_horizon > n - 1)
        throw ConfigError("nested horizon must be in [0, n-1]");
    } else if (s.nested_horizon != 0) {
      throw ConfigError("plain neurons must have nested horizon 0");
    }
    s.quant.validate();
    if (s.quant.lower != 0.0 || s.quant.upper != static_cast<double>(n - 1))
      throw ConfigError("quantizer grid must cover [0, n-1]");
    const int h = s.encoder.hidden.out;
    if (h < 1) throw ConfigError("encoder needs a hidden layer");
    check_layer(s.encoder.hidden, n, h, "encoder hidden");
    check_layer(s.encoder.output, h, 2, "encoder output");
    const int hd = s.decoder.hidden.out;
    if (hd < 1) throw ConfigError("decoder needs a hidden layer");
    check_layer(s.decoder.hidden, 2, hd, "decoder hidden");
    check_layer(s.decoder.output, hd, n, "decoder output");
  }
}

std::vector<std::vector<double>> layer2_predicates(const Signal& x,
                                                   const TlnnParams& params) {
  if (x.size() != static_cast<std::size_t>(params.n))
    throw DataError("signal length " + std::to_string(x.size()) +
                    " does not match the network input length " +
                    std::to_string(params.n));
  const int m = params.neuron_count();
  std::vector<std::vector<double>> rho2(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    auto& row = rho2[static_cast<std::size_t>(j)];
    row.resize(x.size());
    const double c = params.thresholds[static_cast<std::size_t>(j)];
    if (params.comparisons[static_cast<std::size_t>(j)] == Cmp::Ge) {
      for (std::size_t t = 0; t < x.size(); ++t) row[t] = x[t] - c;
    } else {
      for (std::size_t t = 0; t < x.size(); ++t) row[t] = c - x[t];
    }
  }
  return rho2;
}

IntervalResolution resolve_interval(const NeuronSpec& spec, int n, double q1,
                                    double q2) {
  IntervalResolution r;
  const double hi = static_cast<double>(n - 1 - spec.nested_horizon);
  r.clamped_lo = q1 > hi;
  r.tau_lo = r.clamped_lo ? hi : q1;
  const double raw_hi = q1 + q2;
  r.clamped_hi = raw_hi > hi;
  r.tau_hi = r.clamped_hi ? hi : raw_hi;
  if (r.tau_hi < r.tau_lo) r.tau_hi = r.tau_lo;
  r.t1 = static_cast<int>(std::lround(r.tau_lo));
  r.t2 = static_cast<int>(std::lround(r.tau_hi));
  return r;
}

std::vector<double> decode_window_weights(const NeuronSpec& spec, int n,
                                          const IntervalResolution& r,
                                          std::vector<double>* dec_hidden,
                                          std::vector<double>* dec_pre) {
  const double denom = static_cast<double>(n - 1);
  const std::array<double, 2> in{r.tau_lo / denom, r.tau_hi / denom};
  std::vector<double> hid = affine(spec.decoder.hidden, in);
  tanh_inplace(hid);
  const int len = r.t2 - r.t1 + 1;
  const int hd = spec.decoder.hidden.out;
  std::vector<double> pre(static_cast<std::size_t>(len));
  std::vector<double> weights(static_cast<std::size_t>(len));
  for (int p = 0; p < len; ++p) {
    const int row = r.t1 + p;
    double z = spec.decoder.output.b[static_cast<std::size_t>(row)];
    const double* wrow =
        spec.decoder.output.w.data() + static_cast<std::size_t>(row) * hd;
    for (int h = 0; h < hd; ++h) z += wrow[h] * hid[static_cast<std::size_t>(h)];
    pre[static_cast<std::size_t>(p)] = z;
    weights[static_cast<std::size_t>(p)] = softplus(z);
  }
  if (dec_hidden) *dec_hidden = std::move(hid);
  if (dec_pre) *dec_pre = std::move(pre);
  return weights;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Distances of h to every feature of the quantizer staircase that the
// branch-margin guarantee must keep finite differences away from: range
// ends, cell edges and the per-cell transition center.
double quantizer_margin(double h, const QuantSpec& s) {
  double m = std::min(std::abs(h - s.lower), std::abs(s.upper - h));
  if (h > s.lower && h < s.upper) {
    const double d = s.step();
    const double off = h - s.lower;
    double i = std::floor(off / d);
    const double last = std::ldexp(1.0, s.bits) - 2.0;
    if (i > last) i = last;
    const double frac = off - i * d;
    m = std::min(m, std::min(frac, d - frac));
    m = std::min(m, std::abs(frac - 0.5 * d));
  }
  return m;
}

// Distance of tau to the nearest rounding switch (half-integer).
double rounding_margin(double tau) {
  const double frac = tau - std::floor(tau);
  return std::abs(frac - 0.5);
}

void gate_input_margin(std::span<const double> v, std::span<const double> w,
                       double& margin) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    margin = std::min(margin, std::abs(v[i]));
    margin = std::min(margin, std::abs(w[i] * v[i]));
  }
}

}  // namespace

std::pair<double, AtomicTrace> atomic_forward(const NeuronSpec& spec,
                                              std::span<const double> rho2_row,
                                              Mode mode) {
  const int n = static_cast<int>(rho2_row.size());
  AtomicTrace at;
  at.margin = kInf;

  std::vector<double> hid = affine(spec.encoder.hidden, rho2_row);
  tanh_inplace(hid);
  const std::vector<double> out2 = affine(spec.encoder.output, hid);
  at.enc_hidden = std::move(hid);
  at.h1 = out2[0];
  at.h2 = out2[1];
  at.q1 = mode == Mode::Soft ? quantize_soft(at.h1, spec.quant)
                             : quantize_hard(at.h1, spec.quant);
  at.q2 = mode == Mode::Soft ? quantize_soft(at.h2, spec.quant)
                             : quantize_hard(at.h2, spec.quant);
  at.interval = resolve_interval(spec, n, at.q1, at.q2);

  at.margin = std::min(at.margin, quantizer_margin(at.h1, spec.quant));
  at.margin = std::min(at.margin, quantizer_margin(at.h2, spec.quant));
  const double hi = static_cast<double>(n - 1 - spec.nested_horizon);
  at.margin = std::min(at.margin, std::abs(at.q1 - hi));
  at.margin = std::min(at.margin, std::abs(at.q1 + at.q2 - hi));
  at.margin = std::min(at.margin, rounding_margin(at.interval.tau_lo));
  at.margin = std::min(at.margin, rounding_margin(at.interval.tau_hi));

  at.window_weights =
      decode_window_weights(spec, n, at.interval, &at.dec_hidden, &at.dec_pre);

  const int t1 = at.interval.t1;
  const int len = at.interval.t2 - t1 + 1;
  const auto slice = [&](int shift) {
    return rho2_row.subspan(static_cast<std::size_t>(t1 + shift),
                            static_cast<std::size_t>(len));
  };
  switch (spec.kind) {
    case NeuronKind::Always: {
      gate_input_margin(slice(0), at.window_weights, at.margin);
      const auto g = detail::gate_and(slice(0), at.window_weights);
      at.rho3 = g.value;
      at.outer_positive = g.positive_branch;
      break;
    }
    case NeuronKind::Eventually: {
      gate_input_margin(slice(0), at.window_weights, at.margin);
      const auto g = detail::gate_or(slice(0), at.window_weights);
      at.rho3 = g.value;
      at.outer_positive = g.positive_branch;
      break;
    }
    case NeuronKind::AlwaysEventually:
    case NeuronKind::EventuallyAlways: {
      const int shifts = spec.nested_horizon + 1;
      const std::vector<double> ones(static_cast<std::size_t>(shifts), 1.0);
      at.inner_values.resize(static_cast<std::size_t>(shifts));
      at.inner_positive.resize(static_cast<std::size_t>(shifts));
      for (int j = 0; j < shifts; ++j) {
        gate_input_margin(slice(j), at.window_weights, at.margin);
        const auto g = spec.kind == NeuronKind::AlwaysEventually
                           ? detail::gate_or(slice(j), at.window_weights)
                           : detail::gate_and(slice(j), at.window_weights);
        at.inner_values[static_cast<std::size_t>(j)] = g.value;
        at.inner_positive[static_cast<std::size_t>(j)] = g.positive_branch;
      }
      gate_input_margin(at.inner_values, ones, at.margin);
      const auto g = spec.kind == NeuronKind::AlwaysEventually
                         ? detail::gate_and(at.inner_values, ones)
                         : detail::gate_or(at.inner_values, ones);
      at.rho3 = g.value;
      at.outer_positive = g.positive_branch;
      break;
    }
  }
  return {at.rho3, at};
}

ReductionResult reduction_forward(std::span<const double> rho3,
                                  std::span<const std::array<double, 2>> w) {
  const std::size_t m = rho3.size();
  std::vector<double> wa(m), wo(m);
  for (std::size_t j = 0; j < m; ++j) {
    wa[j] = w[j][0];
    wo[j] = w[j][1];
  }
  ReductionResult r;
  const auto ga = detail::gate_and(rho3, wa);
  const auto go = detail::gate_or(rho3, wo);
  r.value = {ga.value, go.value};
  r.and_positive = ga.positive_branch;
  r.or_positive = go.positive_branch;
  return r;
}

OutputResult output_forward(const std::array<double, 2>& rho4,
                            const std::array<double, 2>& w) {
  const auto g = detail::gate_and(rho4, w);
  return {g.value, g.positive_branch};
}

std::pair<double, ForwardTrace> forward(const TlnnParams& params,
                                        const Signal& x, Mode mode) {
  params.validate();
  ForwardTrace tr;
  tr.mode = mode;
  tr.n = params.n;
  tr.rho2 = layer2_predicates(x, params);
  tr.branch_margin = kInf;

  const int m = params.neuron_count();
  std::vector<double> rho3(static_cast<std::size_t>(m));
  tr.atoms.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    auto [v, at] = atomic_forward(params.neurons[static_cast<std::size_t>(j)],
                                  tr.rho2[static_cast<std::size_t>(j)], mode);
    rho3[static_cast<std::size_t>(j)] = v;
    tr.branch_margin = std::min(tr.branch_margin, at.margin);
    tr.atoms.push_back(std::move(at));
  }

  for (int j = 0; j < m; ++j) {
    const double v = rho3[static_cast<std::size_t>(j)];
    const auto& w = params.reduction_weights[static_cast<std::size_t>(j)];
    tr.branch_margin = std::min(tr.branch_margin, std::abs(v));
    tr.branch_margin = std::min(tr.branch_margin, std::abs(w[0] * v));
    tr.branch_margin = std::min(tr.branch_margin, std::abs(w[1] * v));
  }
  const ReductionResult red = reduction_forward(rho3, params.reduction_weights);
  tr.rho4 = red.value;
  tr.and_positive = red.and_positive;
  tr.or_positive = red.or_positive;

  for (int i = 0; i < 2; ++i) {
    tr.branch_margin = std::min(tr.branch_margin, std::abs(tr.rho4[i]));
    tr.branch_margin = std::min(
        tr.branch_margin, std::abs(params.output_weights[i] * tr.rho4[i]));
  }
  const OutputResult out = output_forward(tr.rho4, params.output_weights);
  tr.rho5 = out.value;
  tr.out_positive = out.positive;
  return {tr.rho5, tr};
}

namespace {

void gate_and_backward(double up, double value, bool positive,
                       std::span<const double> v, std::span<const double> w,
                       std::span<double> dv, std::span<double> dw) {
  const double n = static_cast<double>(v.size());
  if (positive) {
    const double scale = (value + 1.0) / n;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double denom = 1.0 + w[i] * v[i];
      dv[i] += up * scale * w[i] / denom;
      dw[i] += up * scale * v[i] / denom;
    }
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (w[i] * v[i] < 0.0) {
        dv[i] += up * w[i] / n;
        dw[i] += up * v[i] / n;
      }
    }
  }
}

void gate_or_backward(double up, double value, bool positive,
                      std::span<const double> v, std::span<const double> w,
                      std::span<double> dv, std::span<double> dw) {
  const double n = static_cast<double>(v.size());
  if (positive) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (w[i] * v[i] > 0.0) {
        dv[i] += up * w[i] / n;
        dw[i] += up * v[i] / n;
      }
    }
  } else {
    const double scale = (1.0 - value) / n;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double denom = 1.0 - w[i] * v[i];
      dv[i] += up * scale * w[i] / denom;
      dw[i] += up * scale * v[i] / denom;
    }
  }
}

// Backpropagates one neuron's upstream gradient through its gates, decoder,
// quantizer and encoder; returns d(loss)/d(rho2 row).
std::vector<double> atom_backward(const NeuronSpec& spec, const AtomicTrace& at,
                                  const std::vector<double>& rho2_row,
                                  double up, NeuronGradients& g) {
  const int n = static_cast<int>(rho2_row.size());
  const int t1 = at.interval.t1;
  const int len = at.interval.t2 - t1 + 1;
  std::vector<double> drho2(static_cast<std::size_t>(n), 0.0);
  std::vector<double> dw(static_cast<std::size_t>(len), 0.0);
  const std::span<const double> row(rho2_row);
  const auto slice = [&](int shift) {
    return row.subspan(static_cast<std::size_t>(t1 + shift),
                       static_cast<std::size_t>(len));
  };
  const auto dslice = [&](int shift) {
    return std::span<double>(drho2).subspan(static_cast<std::size_t>(t1 + shift),
                                            static_cast<std::size_t>(len));
  };
  switch (spec.kind) {
    case NeuronKind::Always:
      gate_and_backward(up, at.rho3, at.outer_positive, slice(0),
                        at.window_weights, dslice(0), dw);
      break;
    case NeuronKind::Eventually:
      gate_or_backward(up, at.rho3, at.outer_positive, slice(0),
                       at.window_weights, dslice(0), dw);
      break;
    case NeuronKind::AlwaysEventually:
    case NeuronKind::EventuallyAlways: {
      const int shifts = spec.nested_horizon + 1;
      const std::vector<double> ones(static_cast<std::size_t>(shifts), 1.0);
      std::vector<double> d_inner(static_cast<std::size_t>(shifts), 0.0);
      std::vector<double> d_ones(static_cast<std::size_t>(shifts), 0.0);
      if (spec.kind == NeuronKind::AlwaysEventually) {
        gate_and_backward(up, at.rho3, at.outer_positive, at.inner_values, ones,
                          d_inner, d_ones);
        for (int j = 0; j < shifts; ++j)
          gate_or_backward(d_inner[static_cast<std::size_t>(j)],
                           at.inner_values[static_cast<std::size_t>(j)],
                           at.inner_positive[static_cast<std::size_t>(j)],
                           slice(j), at.window_weights, dslice(j), dw);
      } else {
        gate_or_backward(up, at.rho3, at.outer_positive, at.inner_values, ones,
                         d_inner, d_ones);
        for (int j = 0; j < shifts; ++j)
          gate_and_backward(d_inner[static_cast<std::size_t>(j)],
                            at.inner_values[static_cast<std::size_t>(j)],
                            at.inner_positive[static_cast<std::size_t>(j)],
                            slice(j), at.window_weights, dslice(j), dw);
      }
      break;
    }
  }

  // Window weights -> decoder output rows inside the window.
  const int hd = spec.decoder.hidden.out;
  std::vector<double> dhid(static_cast<std::size_t>(hd), 0.0);
  for (int p = 0; p < len; ++p) {
    const double dpre = dw[static_cast<std::size_t>(p)] *
                        sigmoid(at.dec_pre[static_cast<std::size_t>(p)]);
    const int r = t1 + p;
    double* gw = g.decoder.output.w.data() + static_cast<std::size_t>(r) * hd;
    const double* w =
        spec.decoder.output.w.data() + static_cast<std::size_t>(r) * hd;
    for (int h = 0; h < hd; ++h) {
      gw[h] += dpre * at.dec_hidden[static_cast<std::size_t>(h)];
      dhid[static_cast<std::size_t>(h)] += dpre * w[h];
    }
    g.decoder.output.b[static_cast<std::size_t>(r)] += dpre;
  }
  const double denom = static_cast<double>(n - 1);
  const std::array<double, 2> dec_in{at.interval.tau_lo / denom,
                                     at.interval.tau_hi / denom};
  double din0 = 0.0, din1 = 0.0;
  for (int h = 0; h < hd; ++h) {
    const double a = at.dec_hidden[static_cast<std::size_t>(h)];
    const double dpre = dhid[static_cast<std::size_t>(h)] * (1.0 - a * a);
    g.decoder.hidden.b[static_cast<std::size_t>(h)] += dpre;
    g.decoder.hidden.w[static_cast<std::size_t>(h) * 2] += dpre * dec_in[0];
    g.decoder.hidden.w[static_cast<std::size_t>(h) * 2 + 1] += dpre * dec_in[1];
    din0 += dpre * spec.decoder.hidden.w[static_cast<std::size_t>(h) * 2];
    din1 += dpre * spec.decoder.hidden.w[static_cast<std::size_t>(h) * 2 + 1];
  }
  double d_tau_lo = din0 / denom;
  double d_tau_hi = din1 / denom;
  if (at.interval.clamped_lo) d_tau_lo = 0.0;
  if (at.interval.clamped_hi) d_tau_hi = 0.0;
  const double dq1 = d_tau_lo + d_tau_hi;
  const double dq2 = d_tau_hi;
  const double dh1 = dq1 * quantize_soft_grad(at.h1, spec.quant);
  const double dh2 = dq2 * quantize_soft_grad(at.h2, spec.quant);

  // Encoder output layer (2 rows over the hidden activations).
  const int he = spec.encoder.hidden.out;
  std::vector<double> denc_hid(static_cast<std::size_t>(he), 0.0);
  const std::array<double, 2> dout{dh1, dh2};
  for (int r = 0; r < 2; ++r) {
    double* gw = g.encoder.output.w.data() + static_cast<std::size_t>(r) * he;
    const double* w =
        spec.encoder.output.w.data() + static_cast<std::size_t>(r) * he;
    for (int h = 0; h < he; ++h) {
      gw[h] += dout[static_cast<std::size_t>(r)] *
               at.enc_hidden[static_cast<std::size_t>(h)];
      denc_hid[static_cast<std::size_t>(h)] += dout[static_cast<std::size_t>(r)] * w[h];
    }
    g.encoder.output.b[static_cast<std::size_t>(r)] += dout[static_cast<std::size_t>(r)];
  }
  for (int h = 0; h < he; ++h) {
    const double a = at.enc_hidden[static_cast<std::size_t>(h)];
    const double dpre = denc_hid[static_cast<std::size_t>(h)] * (1.0 - a * a);
    g.encoder.hidden.b[static_cast<std::size_t>(h)] += dpre;
    double* gw = g.encoder.hidden.w.data() + static_cast<std::size_t>(h) * n;
    const double* w =
        spec.encoder.hidden.w.data() + static_cast<std::size_t>(h) * n;
    for (int t = 0; t < n; ++t) {
      gw[t] += dpre * rho2_row[static_cast<std::size_t>(t)];
      drho2[static_cast<std::size_t>(t)] += dpre * w[t];
    }
  }
  return drho2;
}

DenseLayer zero_like(const DenseLayer& l) {
  DenseLayer z;
  z.in = l.in;
  z.out = l.out;
  z.w.assign(l.w.size(), 0.0);
  z.b.assign(l.b.size(), 0.0);
  return z;
}

}  // namespace

Gradients zero_gradients(const TlnnParams& params) {
  Gradients g;
  const std::size_t m = params.neurons.size();
  g.thresholds.assign(m, 0.0);
  g.neurons.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    g.neurons[j].encoder.hidden = zero_like(params.neurons[j].encoder.hidden);
    g.neurons[j].encoder.output = zero_like(params.neurons[j].encoder.output);
    g.neurons[j].decoder.hidden = zero_like(params.neurons[j].decoder.hidden);
    g.neurons[j].decoder.output = zero_like(params.neurons[j].decoder.output);
  }
  g.reduction_weights.assign(m, {0.0, 0.0});
  g.output_weights = {0.0, 0.0};
  return g;
}

Gradients backward(const ForwardTrace& trace, const TlnnParams& params,
                   double desired) {
  if (trace.mode != Mode::Soft)
    throw std::invalid_argument("backward requires a soft-mode trace");
  const int m = params.neuron_count();
  if (static_cast<int>(trace.atoms.size()) != m || trace.n != params.n)
    throw std::invalid_argument("trace does not match the parameters");

  Gradients g = zero_gradients(params);
  const double up5 = trace.rho5 - desired;

  std::array<double, 2> d4{0.0, 0.0};
  gate_and_backward(up5, trace.rho5, trace.out_positive, trace.rho4,
                    params.output_weights, d4, g.output_weights);

  std::vector<double> rho3(static_cast<std::size_t>(m));
  std::vector<double> wa(static_cast<std::size_t>(m)),
      wo(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    rho3[static_cast<std::size_t>(j)] = trace.atoms[static_cast<std::size_t>(j)].rho3;
    wa[static_cast<std::size_t>(j)] =
        params.reduction_weights[static_cast<std::size_t>(j)][0];
    wo[static_cast<std::size_t>(j)] =
        params.reduction_weights[static_cast<std::size_t>(j)][1];
  }
  std::vector<double> d3(static_cast<std::size_t>(m), 0.0);
  std::vector<double> dwa(static_cast<std::size_t>(m), 0.0),
      dwo(static_cast<std::size_t>(m), 0.0);
  gate_and_backward(d4[0], trace.rho4[0], trace.and_positive, rho3, wa, d3, dwa);
  gate_or_backward(d4[1], trace.rho4[1], trace.or_positive, rho3, wo, d3, dwo);
  for (int j = 0; j < m; ++j)
    g.reduction_weights[static_cast<std::size_t>(j)] = {
        dwa[static_cast<std::size_t>(j)], dwo[static_cast<std::size_t>(j)]};

  for (int j = 0; j < m; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const std::vector<double> drho2 =
        atom_backward(params.neurons[ju], trace.atoms[ju], trace.rho2[ju],
                      d3[ju], g.neurons[ju]);
    double sum = 0.0;
    for (double v : drho2) sum += v;
    g.thresholds[ju] = params.comparisons[ju] == Cmp::Ge ? -sum : sum;
  }
  return g;
}

NeuronSpec make_neuron(NeuronKind kind, int n, int nested_horizon,
                       int hidden_width, double sharpness, Rng& rng) {
  if (hidden_width < 1) throw ConfigError("hidden width must be >= 1");
  NeuronSpec s;
  s.kind = kind;
  s.nested_horizon =
      is_nested(kind) ? std::min(std::max(nested_horizon, 0), n - 1) : 0;
  s.quant = QuantSpec::for_index_range(n, sharpness);
  const double span = static_cast<double>(n - 1);
  auto fill = [&rng](DenseLayer& l, int in, int out, bool draw_bias) {
    l.in = in;
    l.out = out;
    l.w.resize(static_cast<std::size_t>(in) * out);
    l.b.resize(static_cast<std::size_t>(out));
    for (double& v : l.w) v = rng.uniform(-0.1, 0.1);
    if (draw_bias)
      for (double& v : l.b) v = rng.uniform(-0.1, 0.1);
  };
  fill(s.encoder.hidden, n, hidden_width, true);
  fill(s.encoder.output, hidden_width, 2, false);
  // Bias-dominated initial window coordinates: starts anywhere in the index
  // range so every region is reachable, with positive initial lengths.
  s.encoder.output.b[0] = rng.uniform(0.0, 0.95 * span);
  s.encoder.output.b[1] = rng.uniform(0.05 * span, 0.5 * span);
  fill(s.decoder.hidden, 2, hidden_width, true);
  fill(s.decoder.output, hidden_width, n, false);
  // softplus(log(e-1)) = 1, so initial window weights sit near 1.
  const double b0 = std::log(std::exp(1.0) - 1.0);
  for (double& v : s.decoder.output.b) v = b0;
  return s;
}

TlnnParams init_params(int n, double data_lo, double data_hi,
                       int nested_horizon, int hidden_width, double sharpness,
                       std::uint64_t seed, Rng& rng) {
  TlnnParams p;
  p.n = n;
  p.seed = seed;
  // Thresholds start just outside the data range so every neuron begins
  // vacuously true; gradient pressure from negatives moves them into the
  // class margin without ever blocking positives first.
  const double slack =
      0.01 + rng.uniform(0.02, 0.10) * (data_hi - data_lo);
  p.thresholds = {data_lo - slack};
  p.comparisons = {Cmp::Ge};
  // Eventually pairs safely with >=: a sample that stops satisfying the
  // neuron is one the neuron no longer fires on, so both classes push its
  // reduction weight the same way and it cannot lock into a blocking state.
  p.neurons = {make_neuron(NeuronKind::Eventually, n, nested_horizon,
                           hidden_width, sharpness, rng)};
  p.reduction_weights = {{1.0, 1.0}};
  // Initial and-side output gain scaled to the data spread drives
  // misclassified negatives to the -1 target quickly; once they saturate,
  // their gradient vanishes and no neuron is rewarded for deepening
  // violations past the class margin. The or-side stays at unit gain so
  // satisfied samples do not overshoot the +1 target, which would bleed
  // the or-column weights dry and leave the satisfied class gradient-dead.
  const double gain =
      std::clamp(4.8 / std::max(data_hi - data_lo, 1e-12), 0.5, 8.0);
  p.output_weights = {gain, 1.0};
  p.validate();
  return p;
}

void set_sharpness(TlnnParams& params, double sharpness) {
  for (NeuronSpec& s : params.neurons) s.quant.sharpness = sharpness;
}

namespace {

using nlohmann::json;

json layer_to_json(const DenseLayer& l) {
  return json{{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer l;
  l.in = j.at("in").get<int>();
  l.out = j.at("out").get<int>();
  l.w = j.at("w").get<std::vector<double>>();
  l.b = j.at("b").get<std::vector<double>>();
  return l;
}

}  // namespace

std::string checkpoint_to_string(const TlnnParams& params) {
  params.validate();
  json j;
  j["format"] = "tlnn-checkpoint";
  j["version"] = 1;
  j["n"] = params.n;
  j["seed"] = params.seed;
  j["output_weights"] = params.output_weights;
  json neurons = json::array();
  for (std::size_t i = 0; i < params.neurons.size(); ++i) {
    const NeuronSpec& s = params.neurons[i];
    json nj;
    nj["kind"] = to_string(s.kind);
    nj["nested_horizon"] = s.nested_horizon;
    nj["threshold"] = params.thresholds[i];
    nj["comparison"] = params.comparisons[i] == Cmp::Ge ? "ge" : "lt";
    nj["reduction_weights"] = params.reduction_weights[i];
    nj["quant"] = {{"lower", s.quant.lower},
                   {"upper", s.quant.upper},
                   {"bits", s.quant.bits},
                   {"sharpness", s.quant.sharpness}};
    nj["encoder"] = {{"hidden", layer_to_json(s.encoder.hidden)},
                     {"output", layer_to_json(s.encoder.output)}};
    nj["decoder"] = {{"hidden", layer_to_json(s.decoder.hidden)},
                     {"output", layer_to_json(s.decoder.output)}};
    neurons.push_back(std::move(nj));
  }
  j["neurons"] = std::move(neurons);
  return j.dump(2);
}

TlnnParams checkpoint_from_string(const std::string& text) {
  TlnnParams p;
  try {
    const json j = json::parse(text);
    if (!j.is_object() || j.value("format", "") != "tlnn-checkpoint")
      throw ConfigError("not a checkpoint document");
    if (j.at("version").get<int>() != 1)
      throw ConfigError("unsupported checkpoint version");
    p.n = j.at("n").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.output_weights = j.at("output_weights").get<std::array<double, 2>>();
    for (const json& nj : j.at("neurons")) {
      NeuronSpec s;
      s.kind = neuron_kind_from_string(nj.at("kind").get<std::string>());
      s.nested_horizon = nj.at("nested_horizon").get<int>();
      const json& q = nj.at("quant");
      s.quant.lower = q.at("lower").get<double>();
      s.quant.upper = q.at("upper").get<double>();
      s.quant.bits = q.at("bits").get<int>();
      s.quant.sharpness = q.at("sharpness").get<double>();
      s.encoder.hidden = layer_from_json(nj.at("encoder").at("hidden"));
      s.encoder.output = layer_from_json(nj.at("encoder").at("output"));
      s.decoder.hidden = layer_from_json(nj.at("decoder").at("hidden"));
      s.decoder.output = layer_from_json(nj.at("decoder").at("output"));
      p.neurons.push_back(std::move(s));
      p.thresholds.push_back(nj.at("threshold").get<double>());
      const std::string cmp = nj.at("comparison").get<std::string>();
      if (cmp != "ge" && cmp != "lt")
        throw ConfigError("unknown comparison '" + cmp + "'");
      p.comparisons.push_back(cmp == "ge" ? Cmp::Ge : Cmp::Lt);
      p.reduction_weights.push_back(
          nj.at("reduction_weights").get<std::array<double, 2>>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid checkpoint: ") + e.what());
  }
  p.validate();
  return p;
}

void save_checkpoint(const TlnnParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << checkpoint_to_string(params) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

TlnnParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace tlnn
