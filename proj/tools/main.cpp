#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tlnn/errors.hpp"
#include "tlnn/extraction.hpp"
#include "tlnn/formula.hpp"
#include "tlnn/learner.hpp"
#include "tlnn/network.hpp"
#include "tlnn/signals.hpp"

namespace {

using nlohmann::json;

struct AppConfig {
  tlnn::TrainConfig train;
  tlnn::SynthConfig synth;
  std::uint64_t synth_seed = 1;
  int per_condition = 220;
  int moment_window = 32;
  int target_length = 128;
  int positive_train = 110;
  int negative_each = 30;
};

template <typename T>
void fetch(const json& j, const char* key, T& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}

void fetch_fault(const json& j, const char* key, tlnn::FaultModel& m) {
  if (!j.contains(key)) return;
  const json& f = j.at(key);
  fetch(f, "impulse_hz", m.impulse_hz);
  fetch(f, "ring_hz", m.ring_hz);
  fetch(f, "decay", m.decay);
  fetch(f, "amplitude", m.amplitude);
}

AppConfig parse_config(const std::string& path) {
  AppConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw tlnn::IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    const json j = json::parse(ss.str());
    if (!j.is_object()) throw tlnn::ConfigError("config must be a JSON object");
    if (j.contains("version") && j.at("version").get<int>() != 1)
      throw tlnn::ConfigError("unsupported config version");
    if (j.contains("train")) {
      const json& t = j.at("train");
      fetch(t, "eta", cfg.train.eta);
      fetch(t, "prune_threshold", cfg.train.prune_threshold);
      fetch(t, "growth_threshold", cfg.train.growth_threshold);
      fetch(t, "max_neurons", cfg.train.max_neurons);
      fetch(t, "epochs", cfg.train.epochs);
      fetch(t, "structure_every", cfg.train.structure_every);
      fetch(t, "k_initial", cfg.train.k_initial);
      fetch(t, "k_anneal", cfg.train.k_anneal);
      fetch(t, "k_anneal_every", cfg.train.k_anneal_every);
      fetch(t, "seed", cfg.train.seed);
      fetch(t, "nested_horizon", cfg.train.nested_horizon);
      fetch(t, "encoder_hidden", cfg.train.encoder_hidden);
    }
    if (j.contains("synth")) {
      const json& s = j.at("synth");
      fetch(s, "seed", cfg.synth_seed);
      fetch(s, "per_condition", cfg.per_condition);
      fetch(s, "length", cfg.synth.length);
      fetch(s, "sample_rate", cfg.synth.sample_rate);
      fetch(s, "noise_sigma", cfg.synth.noise_sigma);
      fetch_fault(s, "inner", cfg.synth.inner);
      fetch_fault(s, "outer", cfg.synth.outer);
      fetch_fault(s, "rolling", cfg.synth.rolling);
    }
    if (j.contains("preprocess")) {
      const json& p = j.at("preprocess");
      fetch(p, "moment_window", cfg.moment_window);
      fetch(p, "target_length", cfg.target_length);
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      fetch(s, "positive_train", cfg.positive_train);
      fetch(s, "negative_each", cfg.negative_each);
    }
  } catch (const json::exception& e) {
    throw tlnn::ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

std::string checkpoint_stem(const std::string& path) {
  const std::string suffix = ".json";
  if (path.size() > suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return path.substr(0, path.size() - suffix.size());
  return path;
}

void print_metrics(const char* split, const tlnn::Metrics& m) {
  std::cout << split << " error_rate " << tlnn::format_number(m.error_rate)
            << " mean_robustness " << tlnn::format_number(m.mean_robustness)
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Temporal logic network toolkit: synthesize bearing vibration data, "
      "preprocess it, train a network and read back the formula it encodes"};
  app.require_subcommand(1);

  std::string config_path;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset CSV");
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  int synth_count = 0;
  synth->add_option("--out", synth_out, "Output CSV path")->required();
  synth->add_option("--config", config_path, "JSON config file");
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "RNG seed");
  auto* synth_count_opt =
      synth->add_option("--count", synth_count, "Samples per condition");

  auto* prep = app.add_subcommand(
      "preprocess", "Wavelet band moments, downsampling and rescaling");
  std::string prep_in, prep_out;
  int prep_window = 0, prep_target = 0;
  prep->add_option("--in", prep_in, "Raw dataset CSV")->required();
  prep->add_option("--out", prep_out, "Feature dataset CSV")->required();
  prep->add_option("--config", config_path, "JSON config file");
  auto* prep_window_opt =
      prep->add_option("--window", prep_window, "Sliding moment window");
  auto* prep_target_opt =
      prep->add_option("--target-length", prep_target, "Feature length");

  auto* tr = app.add_subcommand("train", "Train a network on a dataset");
  std::string tr_data, tr_out, tr_target;
  int tr_epochs = 0, tr_max_neurons = 0;
  std::uint64_t tr_seed = 0;
  double tr_eta = 0.0;
  tr->add_option("--data", tr_data, "Feature dataset CSV")->required();
  tr->add_option("--out", tr_out, "Checkpoint path (.json)")->required();
  tr->add_option("--config", config_path, "JSON config file");
  tr->add_option("--target", tr_target,
                 "One-vs-rest condition (inner|outer|rolling|normal); "
                 "splits the dataset and writes the split CSVs");
  auto* tr_epochs_opt = tr->add_option("--epochs", tr_epochs, "Epoch count");
  auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "RNG seed");
  auto* tr_eta_opt = tr->add_option("--eta", tr_eta, "Learning rate");
  auto* tr_max_opt =
      tr->add_option("--max-neurons", tr_max_neurons, "Roster cap");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string ev_model, ev_data, ev_per_sample;
  ev->add_option("--model", ev_model, "Checkpoint path")->required();
  ev->add_option("--data", ev_data, "Feature dataset CSV")->required();
  ev->add_option("--per-sample", ev_per_sample,
                 "Write per-sample robustness CSV here");

  auto* ex = app.add_subcommand(
      "extract", "Print the formula a trained checkpoint encodes");
  std::string ex_model, ex_data, ex_regions;
  bool ex_strip = false, ex_raw = false;
  double ex_min_weight = 1e-3;
  ex->add_option("--model", ex_model, "Checkpoint path")->required();
  ex->add_option("--data", ex_data, "Calibration dataset CSV")->required();
  ex->add_flag("--strip-weights", ex_strip, "Drop weight annotations");
  ex->add_flag("--raw", ex_raw, "Skip display simplification");
  ex->add_option("--min-weight", ex_min_weight,
                 "Display threshold for operand weights");
  ex->add_option("--export-regions", ex_regions,
                 "Write one row per temporal window here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const AppConfig cfg = parse_config(config_path);

    if (*synth) {
      const std::uint64_t seed = *synth_seed_opt ? synth_seed : cfg.synth_seed;
      const int count = *synth_count_opt ? synth_count : cfg.per_condition;
      const tlnn::Dataset data = tlnn::synth_dataset(seed, count, cfg.synth);
      tlnn::save_csv(data, synth_out);
      std::cout << "wrote " << synth_out << ": " << data.size()
                << " samples\n";
      for (const tlnn::Condition c :
           {tlnn::Condition::Inner, tlnn::Condition::Outer,
            tlnn::Condition::Rolling, tlnn::Condition::Normal}) {
        int n = 0;
        for (const tlnn::LabeledSample& s : data.samples)
          if (s.condition == tlnn::to_string(c)) ++n;
        std::cout << "  " << tlnn::to_string(c) << ' ' << n << '\n';
      }
    } else if (*prep) {
      const int window = *prep_window_opt ? prep_window : cfg.moment_window;
      const int target = *prep_target_opt ? prep_target : cfg.target_length;
      const tlnn::Dataset raw = tlnn::load_csv(prep_in);
      const tlnn::Dataset features =
          tlnn::preprocess_dataset(raw, window, target);
      tlnn::save_csv(features, prep_out);
      std::cout << "wrote " << prep_out << ": " << features.size()
                << " samples, length " << features.signal_length() << '\n';
    } else if (*tr) {
      tlnn::TrainConfig tc = cfg.train;
      if (*tr_epochs_opt) tc.epochs = tr_epochs;
      if (*tr_seed_opt) tc.seed = tr_seed;
      if (*tr_eta_opt) tc.eta = tr_eta;
      if (*tr_max_opt) tc.max_neurons = tr_max_neurons;

      const tlnn::Dataset full = tlnn::load_csv(tr_data);
      const std::string stem = checkpoint_stem(tr_out);
      tlnn::Dataset train_set = full;
      tlnn::Dataset test_set;
      const bool has_target = !tr_target.empty();
      if (has_target) {
        const tlnn::Condition c = tlnn::condition_from_string(tr_target);
        std::tie(train_set, test_set) =
            tlnn::one_vs_rest_split(full, c, cfg.positive_train,
                                    cfg.negative_each);
        tlnn::save_csv(train_set, stem + ".train.csv");
        tlnn::save_csv(test_set, stem + ".test.csv");
      }
      const auto [params, history] = tlnn::train(train_set, tc);
      tlnn::save_checkpoint(params, tr_out);
      tlnn::write_history_csv(history, stem + ".history.csv");
      std::cout << "wrote " << tr_out << ": " << params.neuron_count()
                << " neurons after " << tc.epochs << " epochs\n";
      print_metrics("train", tlnn::evaluate(params, train_set));
      if (has_target) print_metrics("test", tlnn::evaluate(params, test_set));
    } else if (*ev) {
      const tlnn::TlnnParams params = tlnn::load_checkpoint(ev_model);
      const tlnn::Dataset data = tlnn::load_csv(ev_data);
      data.validate();
      const tlnn::Metrics m = tlnn::evaluate(params, data);
      std::cout << "samples " << data.size() << '\n';
      print_metrics("eval", m);
      if (!ev_per_sample.empty()) {
        std::ofstream out(ev_per_sample);
        if (!out)
          throw tlnn::IoError("cannot open '" + ev_per_sample +
                              "' for writing");
        out << "index,label,robustness,predicted\n";
        for (std::size_t i = 0; i < data.size(); ++i) {
          const double rho = m.robustness[i];
          out << i << ',' << data.samples[i].label << ','
              << tlnn::format_number(rho) << ',' << (rho >= 0.0 ? 1 : -1)
              << '\n';
        }
        if (!out)
          throw tlnn::IoError("failed writing '" + ev_per_sample + "'");
      }
    } else if (*ex) {
      const tlnn::TlnnParams params = tlnn::load_checkpoint(ex_model);
      const tlnn::Dataset data = tlnn::load_csv(ex_data);
      tlnn::Formula f = tlnn::extract_formula(params, data);
      if (!ex_raw) f = tlnn::display_simplify(f, ex_min_weight);
      if (ex_strip) f = tlnn::strip_weights(f);
      std::cout << tlnn::format_formula(f) << '\n';
      if (!ex_regions.empty())
        tlnn::write_regions_csv(tlnn::formula_regions(f), ex_regions);
    }
  } catch (const tlnn::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
