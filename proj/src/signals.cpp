#include "tlnn/signals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "tlnn/errors.hpp"

namespace tlnn {

std::size_t Dataset::signal_length() const {
  if (samples.empty()) throw DataError("dataset is empty");
  const std::size_t n = samples.front().signal.size();
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].signal.size() != n)
      throw DataError("signal length mismatch", static_cast<long>(i));
  return n;
}

void Dataset::validate() const {
  const std::size_t n = signal_length();
  if (n == 0) throw DataError("signals are empty");
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].label != 1 && samples[i].label != -1)
      throw DataError("label must be +1 or -1", static_cast<long>(i));
}

std::pair<double, double> Dataset::value_range() const {
  if (samples.empty()) throw DataError("dataset is empty");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const LabeledSample& s : samples)
    for (double v : s.signal.samples) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return {lo, hi};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double_cell(const std::string& cell, long row) {
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw DataError("malformed value '" + cell + "'", row);
  return v;
}

int parse_label_cell(const std::string& cell, long row) {
  std::string_view sv = cell;
  if (!sv.empty() && sv.front() == '+') sv.remove_prefix(1);
  int v = 0;
  auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
  if (res.ec != std::errc() || res.ptr != sv.data() + sv.size())
    throw DataError("malformed label '" + cell + "'", row);
  if (v != 1 && v != -1) throw DataError("label must be +1 or -1", row);
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' has no header");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "label")
    throw DataError("'" + path + "' must start with a 'label' column");
  const bool has_condition = header.size() > 1 && header[1] == "condition";
  const std::size_t value_offset = has_condition ? 2 : 1;
  if (header.size() <= value_offset)
    throw DataError("'" + path + "' has no value columns");
  const std::size_t width = header.size();

  Dataset data;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width)
      throw DataError("expected " + std::to_string(width) + " cells, found " +
                          std::to_string(cells.size()),
                      row);
    LabeledSample s;
    s.label = parse_label_cell(cells[0], row);
    if (has_condition) s.condition = cells[1];
    s.signal.samples.reserve(width - value_offset);
    for (std::size_t i = value_offset; i < width; ++i)
      s.signal.samples.push_back(parse_double_cell(cells[i], row));
    data.samples.push_back(std::move(s));
  }
  return data;
}

void save_csv(const Dataset& data, const std::string& path) {
  const std::size_t n = data.signal_length();
  const bool has_condition =
      std::any_of(data.samples.begin(), data.samples.end(),
                  [](const LabeledSample& s) { return !s.condition.empty(); });
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "label";
  if (has_condition) out << ",condition";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << i;
  out << '\n';
  for (const LabeledSample& s : data.samples) {
    out << s.label;
    if (has_condition) out << ',' << s.condition;
    for (double v : s.signal.samples) out << ',' << format_number(v);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

namespace {

// Orthonormal Haar analysis pair with stride-2 downsampling.
std::pair<Signal, Signal> haar_split(const Signal& x) {
  constexpr double inv_sqrt2 = 0.7071067811865476;
  const std::size_t half = x.size() / 2;
  Signal a, d;
  a.samples.resize(half);
  d.samples.resize(half);
  a.sample_period = d.sample_period = x.sample_period * 2.0;
  for (std::size_t i = 0; i < half; ++i) {
    a.samples[i] = (x.samples[2 * i] + x.samples[2 * i + 1]) * inv_sqrt2;
    d.samples[i] = (x.samples[2 * i] - x.samples[2 * i + 1]) * inv_sqrt2;
  }
  return {std::move(a), std::move(d)};
}

}  // namespace

std::array<Signal, 4> wpt_level2(const Signal& x) {
  if (x.size() == 0 || x.size() % 4 != 0)
    throw DataError("wavelet input length must be a positive multiple of 4");
  auto [a, d] = haar_split(x);
  auto [aa, ad] = haar_split(a);
  auto [da, dd] = haar_split(d);
  // Frequency order: the detail branch swaps its children (filter-bank
  // frequency folding), so the bands run lowest to highest.
  return {std::move(aa), std::move(ad), std::move(dd), std::move(da)};
}

Signal second_moment_features(std::span<const Signal> bands, int window) {
  if (window < 1) throw DataError("moment window must be positive");
  Signal out;
  for (const Signal& band : bands) {
    if (static_cast<std::size_t>(window) > band.size())
      throw DataError("moment window exceeds band length");
    const std::size_t count = band.size() - static_cast<std::size_t>(window) + 1;
    out.samples.reserve(out.samples.size() + count);
    for (std::size_t p = 0; p < count; ++p) {
      double mean = 0.0;
      for (int j = 0; j < window; ++j) mean += band.samples[p + j];
      mean /= window;
      double var = 0.0;
      for (int j = 0; j < window; ++j) {
        const double dlt = band.samples[p + j] - mean;
        var += dlt * dlt;
      }
      out.samples.push_back(var / window);
    }
    out.sample_period = band.sample_period;
  }
  return out;
}

Signal downsample(const Signal& x, int target) {
  if (target < 1 || static_cast<std::size_t>(target) > x.size())
    throw DataError("downsample target must be in [1, signal length]");
  const std::size_t n = x.size();
  Signal out;
  out.samples.resize(static_cast<std::size_t>(target));
  out.sample_period = x.sample_period * static_cast<double>(n) / target;
  for (std::size_t i = 0; i < static_cast<std::size_t>(target); ++i) {
    const std::size_t b0 = i * n / target;
    const std::size_t b1 = (i + 1) * n / target;
    double sum = 0.0;
    for (std::size_t j = b0; j < b1; ++j) sum += x.samples[j];
    out.samples[i] = sum / static_cast<double>(b1 - b0);
  }
  return out;
}

Signal preprocess_signal(const Signal& x, int moment_window, int target) {
  const auto bands = wpt_level2(x);
  const Signal feats = second_moment_features(bands, moment_window);
  return downsample(feats, target);
}

Dataset preprocess_dataset(const Dataset& data, int moment_window, int target) {
  data.validate();
  Dataset out;
  out.samples.reserve(data.size());
  for (const LabeledSample& s : data.samples) {
    LabeledSample t;
    t.signal = preprocess_signal(s.signal, moment_window, target);
    t.label = s.label;
    t.condition = s.condition;
    out.samples.push_back(std::move(t));
  }
  const auto [lo, hi] = out.value_range();
  const double range = hi - lo;
  for (LabeledSample& s : out.samples)
    for (double& v : s.signal.samples) v = range > 0.0 ? (v - lo) / range : 0.0;
  return out;
}

const char* to_string(Condition c) {
  switch (c) {
    case Condition::Inner: return "inner";
    case Condition::Outer: return "outer";
    case Condition::Rolling: return "rolling";
    case Condition::Normal: return "normal";
  }
  return "?";
}

Condition condition_from_string(const std::string& s) {
  if (s == "inner") return Condition::Inner;
  if (s == "outer") return Condition::Outer;
  if (s == "rolling") return Condition::Rolling;
  if (s == "normal") return Condition::Normal;
  throw ConfigError("unknown condition '" + s + "'");
}

namespace {

const FaultModel& model_for(Condition c, const SynthConfig& cfg) {
  switch (c) {
    case Condition::Inner: return cfg.inner;
    case Condition::Outer: return cfg.outer;
    default: return cfg.rolling;
  }
}

void validate_synth(const SynthConfig& cfg) {
  if (cfg.length <= 0) throw ConfigError("synth length must be positive");
  if (cfg.sample_rate <= 0.0) throw ConfigError("sample rate must be positive");
  if (cfg.noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  for (const FaultModel* m : {&cfg.inner, &cfg.outer, &cfg.rolling}) {
    if (m->impulse_hz <= 0.0) throw ConfigError("impulse rate must be positive");
    if (m->decay <= 0.0) throw ConfigError("decay must be positive");
  }
}

}  // namespace

Signal synth_one(Rng& rng, Condition c, const SynthConfig& cfg) {
  validate_synth(cfg);
  Signal s;
  s.samples.assign(static_cast<std::size_t>(cfg.length), 0.0);
  s.sample_period = 1.0 / cfg.sample_rate;
  if (c != Condition::Normal) {
    const FaultModel& m = model_for(c, cfg);
    const double fs = cfg.sample_rate;
    const double period = fs / m.impulse_hz;  // samples between strikes
    // Ring support: past this many samples the envelope is below 1e-8.
    const int span = static_cast<int>(std::ceil(18.5 / m.decay * fs));
    const double start = rng.uniform(0.0, period);
    for (double t0 = start; t0 < cfg.length; t0 += period) {
      const double amp = m.amplitude * (1.0 + 0.2 * rng.uniform(-1.0, 1.0));
      const int j0 = static_cast<int>(std::ceil(t0));
      const int j1 = std::min(cfg.length - 1, j0 + span);
      for (int j = j0; j <= j1; ++j) {
        const double dt = (j - t0) / fs;
        s.samples[static_cast<std::size_t>(j)] +=
            amp * std::exp(-m.decay * dt) *
            std::sin(2.0 * std::numbers::pi * m.ring_hz * dt);
      }
    }
  }
  if (cfg.noise_sigma > 0.0)
    for (double& v : s.samples) v += cfg.noise_sigma * rng.gaussian();
  return s;
}

std::vector<Signal> synth_bearing(Rng& rng, Condition c, int count,
                                  const SynthConfig& cfg) {
  std::vector<Signal> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    Rng child = rng.split();
    out.push_back(synth_one(child, c, cfg));
  }
  return out;
}

Dataset synth_dataset(std::uint64_t seed, int per_condition,
                      const SynthConfig& cfg) {
  if (per_condition < 1) throw DataError("per-condition count must be positive");
  Rng root(seed);
  Dataset data;
  data.samples.reserve(static_cast<std::size_t>(per_condition) * 4);
  for (Condition c : {Condition::Inner, Condition::Outer, Condition::Rolling,
                      Condition::Normal}) {
    Rng branch = root.split();
    for (Signal& sig : synth_bearing(branch, c, per_condition, cfg)) {
      LabeledSample s;
      s.signal = std::move(sig);
      s.label = c == Condition::Normal ? -1 : 1;
      s.condition = to_string(c);
      data.samples.push_back(std::move(s));
    }
  }
  return data;
}

std::pair<Dataset, Dataset> one_vs_rest_split(const Dataset& full,
                                              Condition target,
                                              int n_pos_train, int n_neg_each) {
  full.validate();
  if (n_pos_train < 1 || n_neg_each < 1)
    throw DataError("split sizes must be positive");
  std::array<std::vector<const LabeledSample*>, 4> by_condition;
  for (const LabeledSample& s : full.samples) {
    if (s.condition.empty()) throw DataError("sample missing condition tag");
    by_condition[static_cast<std::size_t>(condition_from_string(s.condition))]
        .push_back(&s);
  }
  const auto& pos = by_condition[static_cast<std::size_t>(target)];
  if (pos.size() <= static_cast<std::size_t>(n_pos_train))
    throw DataError("condition '" + std::string(to_string(target)) + "' has " +
                    std::to_string(pos.size()) + " samples, need more than " +
                    std::to_string(n_pos_train));
  Dataset train, test;
  auto add = [](Dataset& d, const LabeledSample& s, int label) {
    LabeledSample copy = s;
    copy.label = label;
    d.samples.push_back(std::move(copy));
  };
  for (std::size_t i = 0; i < pos.size(); ++i)
    add(i < static_cast<std::size_t>(n_pos_train) ? train : test, *pos[i], 1);
  for (Condition c : {Condition::Inner, Condition::Outer, Condition::Rolling,
                      Condition::Normal}) {
    if (c == target) continue;
    const auto& neg = by_condition[static_cast<std::size_t>(c)];
    if (neg.size() < 2 * static_cast<std::size_t>(n_neg_each))
      throw DataError("condition '" + std::string(to_string(c)) + "' has " +
                      std::to_string(neg.size()) + " samples, need at least " +
                      std::to_string(2 * n_neg_each));
    for (int i = 0; i < n_neg_each; ++i) add(train, *neg[static_cast<std::size_t>(i)], -1);
    for (int i = n_neg_each; i < 2 * n_neg_each; ++i)
      add(test, *neg[static_cast<std::size_t>(i)], -1);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace tlnn
