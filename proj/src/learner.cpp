#include "tlnn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tlnn/errors.hpp"

namespace tlnn {

void TrainConfig::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw ConfigError("learning rate must be in [0, 1]");
  if (!(prune_threshold >= 0.0))
    throw ConfigError("prune threshold must be >= 0");
  if (!(growth_threshold > 0.0))
    throw ConfigError("growth threshold must be > 0");
  if (max_neurons < 1) throw ConfigError("max neurons must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (structure_every < 1) throw ConfigError("structure cadence must be >= 1");
  if (!(k_initial > 0.0)) throw ConfigError("initial sharpness must be > 0");
  if (!(k_anneal > 0.0)) throw ConfigError("anneal factor must be > 0");
  if (k_anneal_every < 1) throw ConfigError("anneal period must be >= 1");
  if (nested_horizon < 0) throw ConfigError("nested horizon must be >= 0");
  if (encoder_hidden < 1) throw ConfigError("encoder width must be >= 1");
}

void sgd_step(TlnnParams& params, const Gradients& grads, double eta) {
  for_each_param(params, grads,
                 [eta](double& theta, const double& g, ParamClass cls) {
                   theta -= eta * g;
                   if (cls == ParamClass::NonNegative && theta < 0.0)
                     theta = 0.0;
                 });
}

int prune_neurons(TlnnParams& params, double threshold) {
  const std::size_t m = params.neurons.size();
  const std::vector<std::array<double, 2>> original = params.reduction_weights;
  for (auto& w : params.reduction_weights)
    for (double& v : w)
      if (v < threshold) v = 0.0;

  std::vector<bool> keep(m);
  bool any = false;
  for (std::size_t j = 0; j < m; ++j) {
    const auto& w = params.reduction_weights[j];
    keep[j] = w[0] > 0.0 || w[1] > 0.0;
    any = any || keep[j];
  }
  if (!any) {
    // Last-neuron guard: the strongest original neuron survives untouched.
    std::size_t best = 0;
    double best_w = -1.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double w = std::max(original[j][0], original[j][1]);
      if (w > best_w) {
        best_w = w;
        best = j;
      }
    }
    params.reduction_weights[best] = original[best];
    keep[best] = true;
  }

  int removed = 0;
  std::size_t to = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (!keep[j]) {
      ++removed;
      continue;
    }
    if (to != j) {
      params.neurons[to] = std::move(params.neurons[j]);
      params.thresholds[to] = params.thresholds[j];
      params.comparisons[to] = params.comparisons[j];
      params.reduction_weights[to] = params.reduction_weights[j];
    }
    ++to;
  }
  params.neurons.resize(to);
  params.thresholds.resize(to);
  params.comparisons.resize(to);
  params.reduction_weights.resize(to);
  return removed;
}

double dataset_cost(const TlnnParams& params, const Dataset& data) {
  double sum = 0.0;
  for (const LabeledSample& s : data.samples) {
    const auto [y, tr] = forward(params, s.signal, Mode::Soft);
    const double d = y - static_cast<double>(s.label);
    sum += d * d;
  }
  return sum / static_cast<double>(data.size());
}

bool maybe_add_neuron(TlnnParams& params, const Dataset& data,
                      const TrainConfig& cfg, Rng& rng) {
  if (params.neuron_count() >= cfg.max_neurons) return false;
  if (dataset_cost(params, data) <= cfg.growth_threshold) return false;
  static constexpr NeuronKind kKinds[4] = {
      NeuronKind::Always, NeuronKind::Eventually, NeuronKind::AlwaysEventually,
      NeuronKind::EventuallyAlways};
  const NeuronKind kind = kKinds[rng.uniform_int(0, 3)];
  // Comparison direction is paired to the kind so a neuron that blocks a
  // sample is also one the sample no longer satisfies: both classes then
  // agree on the weight gradient and the neuron cannot lock into a state
  // where it permanently vetoes one class. Outer-universal kinds pair with
  // <, outer-existential kinds with >=.
  const Cmp cmp = (kind == NeuronKind::Always || kind == NeuronKind::EventuallyAlways)
                      ? Cmp::Lt
                      : Cmp::Ge;
  const auto [lo, hi] = data.value_range();
  // Vacuously true start: the new neuron cannot block already-fit samples,
  // so it joins the conjunction harmlessly and is carved in by gradients.
  const double slack = 0.01 + rng.uniform(0.02, 0.10) * (hi - lo);
  const double threshold = cmp == Cmp::Ge ? lo - slack : hi + slack;
  const double sharpness = params.neurons.front().quant.sharpness;
  params.neurons.push_back(make_neuron(kind, params.n, cfg.nested_horizon,
                                       cfg.encoder_hidden, sharpness, rng));
  params.thresholds.push_back(threshold);
  params.comparisons.push_back(cmp);
  params.reduction_weights.push_back({1.0, 1.0});
  return true;
}

namespace {

void hard_pass(const TlnnParams& params, const Dataset& data, double& mean,
               double& variance) {
  double sum = 0.0, sum_sq = 0.0;
  for (const LabeledSample& s : data.samples) {
    const auto [y, tr] = forward(params, s.signal, Mode::Hard);
    sum += y;
    sum_sq += y * y;
  }
  const double n = static_cast<double>(data.size());
  mean = sum / n;
  variance = sum_sq / n - mean * mean;
}

}  // namespace

std::pair<TlnnParams, TrainHistory> train(const Dataset& data,
                                          const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const int n = static_cast<int>(data.signal_length());
  const auto [lo, hi] = data.value_range();

  Rng rng(cfg.seed);
  TlnnParams params = init_params(n, lo, hi, cfg.nested_horizon,
                                  cfg.encoder_hidden, cfg.k_initial, cfg.seed,
                                  rng);
  TrainHistory history;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double k =
        cfg.k_initial *
        std::pow(cfg.k_anneal, (epoch - 1) / cfg.k_anneal_every);
    set_sharpness(params, k);

    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j =
          static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)));
      std::swap(order[i], order[j]);
    }

    double loss_sum = 0.0;
    for (const std::size_t idx : order) {
      const LabeledSample& s = data.samples[idx];
      const double desired = static_cast<double>(s.label);
      const auto [y, trace] = forward(params, s.signal, Mode::Soft);
      const Gradients grads = backward(trace, params, desired);
      sgd_step(params, grads, cfg.eta);
      const double d = y - desired;
      loss_sum += 0.5 * d * d;
    }

    if (epoch % cfg.structure_every == 0) {
      prune_neurons(params, cfg.prune_threshold);
      maybe_add_neuron(params, data, cfg, rng);
    }

    EpochStats st;
    st.epoch = epoch;
    st.loss = loss_sum / static_cast<double>(data.size());
    st.cost = dataset_cost(params, data);
    st.neurons = params.neuron_count();
    hard_pass(params, data, st.mean_robustness, st.robustness_variance);
    history.epochs.push_back(st);
  }
  return {std::move(params), std::move(history)};
}

Metrics evaluate(const TlnnParams& params, const Dataset& data) {
  Metrics m;
  m.robustness.reserve(data.size());
  int errors = 0;
  double sum = 0.0;
  for (const LabeledSample& s : data.samples) {
    const auto [y, tr] = forward(params, s.signal, Mode::Hard);
    m.robustness.push_back(y);
    sum += y;
    const int predicted = y >= 0.0 ? 1 : -1;
    if (predicted != s.label) ++errors;
  }
  m.error_rate = static_cast<double>(errors) / static_cast<double>(data.size());
  m.mean_robustness = sum / static_cast<double>(data.size());
  return m;
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "epoch,loss,cost,neurons,mean_robustness,robustness_variance\n";
  for (const EpochStats& st : history.epochs) {
    out << st.epoch << ',' << format_number(st.loss) << ','
        << format_number(st.cost) << ',' << st.neurons << ','
        << format_number(st.mean_robustness) << ','
        << format_number(st.robustness_variance) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace tlnn
