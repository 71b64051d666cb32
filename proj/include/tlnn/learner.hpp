#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tlnn/network.hpp"
#include "tlnn/signals.hpp"

namespace tlnn {

struct TrainConfig {
  double eta = 0.05;              // SGD learning rate
  double prune_threshold = 0.05;  // reduction weights below this are cut
  double growth_threshold = 0.5;  // mean squared loss that triggers growth
  int max_neurons = 8;
  int epochs = 200;
  int structure_every = 1;        // epochs between prune/grow passes
  double k_initial = 10.0;        // quantizer sharpness schedule
  double k_anneal = 2.0;
  int k_anneal_every = 20;
  std::uint64_t seed = 1;
  int nested_horizon = 5;
  int encoder_hidden = 16;

  void validate() const;  // throws ConfigError
};

struct Metrics {
  double error_rate = 0.0;
  double mean_robustness = 0.0;
  std::vector<double> robustness;  // per sample
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;  // mean 0.5*(y - y_d)^2 over the epoch's updates
  double cost = 0.0;  // growth criterion after the epoch, see dataset_cost
  int neurons = 0;
  double mean_robustness = 0.0;      // hard-mode output over the dataset
  double robustness_variance = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

// One gradient step on every parameter, then projection of the reduction
// and output weights back onto [0, inf).
void sgd_step(TlnnParams& params, const Gradients& grads, double eta);

/* Zeroes reduction weights strictly below the threshold and removes
 * neurons disconnected on both sides. Always keeps at least one neuron:
 * if the sweep would empty the network, the neuron with the largest
 * reduction weight survives unchanged. Returns the number removed. */
int prune_neurons(TlnnParams& params, double threshold);

// Mean of (y - y_d)^2 in soft mode over the dataset; the growth criterion.
double dataset_cost(const TlnnParams& params, const Dataset& data);

/* Adds one neuron with random kind, comparison and threshold when the cost
 * exceeds the growth threshold and the roster is not full. Returns true if
 * a neuron was added. */
bool maybe_add_neuron(TlnnParams& params, const Dataset& data,
                      const TrainConfig& cfg, Rng& rng);

std::pair<TlnnParams, TrainHistory> train(const Dataset& data,
                                          const TrainConfig& cfg);

// Hard-mode evaluation; a sample is classified +1 when the output is >= 0.
Metrics evaluate(const TlnnParams& params, const Dataset& data);

void write_history_csv(const TrainHistory& history, const std::string& path);

}  // namespace tlnn
