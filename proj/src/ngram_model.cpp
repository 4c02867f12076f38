#include "constest/ngram_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "constest/error.hpp"
#include "constest/rng.hpp"

namespace constest {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr char kMagic[4] = {'C', 'T', 'N', 'G'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 5 + 8;

std::uint64_t fnv_byte(std::uint64_t h, unsigned char b) {
  return (h ^ b) * kFnvPrime;
}

bool is_power_of_two(std::uint32_t v) { return v && !(v & (v - 1)); }

void check_spec(const FeatureSpec& spec) {
  if (!is_power_of_two(spec.hash_dim)) throw ConfigError("hash_dim must be a power of two");
  if (spec.ngram_min < 1 || spec.ngram_min > spec.ngram_max) {
    throw ConfigError("invalid n-gram order range");
  }
}

// log(1 + exp(m)) without overflow.
double softplus(double m) {
  return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

double signed_label(int label) { return label == 1 ? 1.0 : -1.0; }

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "model files are little-endian");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos) {
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::uint64_t hash_ngram(std::span<const std::string> ngram) {
  std::uint64_t h = fnv_byte(kFnvOffset, static_cast<unsigned char>(ngram.size()));
  for (const auto& token : ngram) {
    for (unsigned char c : token) h = fnv_byte(h, c);
    h = fnv_byte(h, 0x1f);
  }
  return h;
}

SparseVector featurize(const Tokens& tokens, const FeatureSpec& spec) {
  Tokens padded;
  padded.reserve(tokens.size() + 2);
  padded.emplace_back(kBoundary);
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  padded.emplace_back(kBoundary);

  std::vector<std::uint32_t> hits;
  const std::span<const std::string> view(padded);
  for (int n = spec.ngram_min; n <= spec.ngram_max; ++n) {
    const auto order = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + order <= padded.size(); ++i) {
      hits.push_back(static_cast<std::uint32_t>(hash_ngram(view.subspan(i, order)) &
                                                (spec.hash_dim - 1)));
    }
  }
  std::sort(hits.begin(), hits.end());
  SparseVector out;
  for (std::uint32_t idx : hits) {
    if (!out.empty() && out.back().index == idx) {
      out.back().value += 1.0;
    } else {
      out.push_back(Feature{idx, 1.0});
    }
  }
  return out;
}

double sigmoid(double z) {
  // Clamped so finite weights never produce exactly 0 or 1.
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  static const double hi = std::nextafter(1.0, 0.0);
  const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(p, lo, hi);
}

NGramModel::NGramModel(const FeatureSpec& spec, bool use_markup)
    : spec_(spec), use_markup_(use_markup) {
  check_spec(spec_);
  weights_.assign(spec_.hash_dim, 0.0);
}

double NGramModel::logit(const SparseVector& x) const {
  double z = bias_;
  for (const auto& f : x) z += weights_[f.index] * f.value;
  return z;
}

double NGramModel::score(const Tokens& tokens) const {
  return sigmoid(logit(featurize(tokens, spec_)));
}

double NGramModel::score(const Tokens& tokens) {
  return std::as_const(*this).score(tokens);
}

bool NGramModel::finite() const {
  return std::isfinite(bias_) &&
         std::all_of(weights_.begin(), weights_.end(),
                     [](double w) { return std::isfinite(w); });
}

double instance_loss(const NGramModel& model, const SparseVector& x, int label, double l2) {
  const double margin = signed_label(label) * model.logit(x);
  double sq = 0.0;
  for (double w : model.weights()) sq += w * w;
  return softplus(-margin) + 0.5 * l2 * sq;
}

Gradient instance_gradient(const NGramModel& model, const SparseVector& x, int label,
                           double l2) {
  const double residual = sigmoid(model.logit(x)) - (label == 1 ? 1.0 : 0.0);
  Gradient g;
  g.weights.reserve(x.size());
  for (const auto& f : x) {
    g.weights.push_back(Feature{f.index, residual * f.value + l2 * model.weights()[f.index]});
  }
  g.bias = residual;
  return g;
}

std::string to_string(DevMetric metric) {
  return metric == DevMetric::pair_accuracy ? "pair_accuracy" : "classification_accuracy";
}

DevMetric parse_dev_metric(std::string_view name) {
  if (name == "pair_accuracy") return DevMetric::pair_accuracy;
  if (name == "classification_accuracy") return DevMetric::classification_accuracy;
  throw ConfigError("unknown dev metric '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (hash_dim < (1u << 10) || !is_power_of_two(hash_dim)) {
    throw ConfigError("hash_dim must be a power of two >= 1024");
  }
  if (!(l2 >= 0) || l2 * learning_rate >= 1.0) throw ConfigError("l2 out of range");
  check_spec(FeatureSpec{hash_dim, ngram_min, ngram_max});
}

std::size_t select_best_epoch(std::span<const double> metrics) {
  if (metrics.empty()) throw ContractViolation("no epochs to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    if (metrics[i] > metrics[best]) best = i;
  }
  return best;
}

double classification_accuracy(const NGramModel& model, const Dataset& data) {
  if (data.instances.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& inst : data.instances) {
    const int predicted = model.score(inst.tokens) >= 0.5 ? 1 : 0;
    correct += predicted == inst.label;
  }
  return static_cast<double>(correct) / static_cast<double>(data.instances.size());
}

double mean_loss(const NGramModel& model, const Dataset& data, double l2) {
  if (data.instances.empty()) return 0.0;
  double total = 0.0;
  for (const auto& inst : data.instances) {
    total += softplus(-signed_label(inst.label) * model.logit(featurize(inst.tokens, model.spec())));
  }
  double sq = 0.0;
  for (double w : model.weights()) sq += w * w;
  return total / static_cast<double>(data.instances.size()) + 0.5 * l2 * sq;
}

DevEvaluator classification_accuracy_evaluator(Dataset held_out) {
  return [data = std::move(held_out)](const NGramModel& m) {
    return classification_accuracy(m, data);
  };
}

TrainResult train(const Dataset& train_set, const DevEvaluator& dev,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.instances.empty()) throw ConfigError("training set is empty");
  const std::size_t positives = train_set.count_label(1);
  if (positives == 0 || positives == train_set.instances.size()) {
    throw ConfigError("training set must contain both labels");
  }

  const FeatureSpec spec{config.hash_dim, config.ngram_min, config.ngram_max};
  const bool use_markup = train_set.scheme == Scheme::focused;

  std::vector<SparseVector> features;
  std::vector<int> labels;
  features.reserve(train_set.instances.size());
  for (const auto& inst : train_set.instances) {
    features.push_back(featurize(inst.tokens, spec));
    labels.push_back(inst.label);
  }

  // Weights are stored as scale * v so the L2 shrink is O(1) per step.
  std::vector<double> v(spec.hash_dim, 0.0);
  double scale = 1.0;
  double bias = 0.0;
  std::uint64_t step = 0;

  const auto snapshot = [&] {
    NGramModel m(spec, use_markup);
    for (std::size_t i = 0; i < v.size(); ++i) m.weights()[i] = scale * v[i];
    m.set_bias(bias);
    return m;
  };
  const auto objective = [&](const NGramModel& m) {
    double total = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      total += softplus(-signed_label(labels[i]) * m.logit(features[i]));
    }
    double sq = 0.0;
    for (double w : m.weights()) sq += w * w;
    return total / static_cast<double>(features.size()) + 0.5 * config.l2 * sq;
  };

  TrainResult result;
  NGramModel initial = snapshot();
  result.trace.push_back(EpochRecord{0, objective(initial), 0.0});

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  std::vector<double> dev_metrics;
  std::optional<NGramModel> best;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++step;
      const double eta = config.learning_rate / std::sqrt(static_cast<double>(step));
      const SparseVector& x = features[i];
      double z = bias;
      for (const auto& f : x) z += scale * v[f.index] * f.value;
      const double residual = sigmoid(z) - (labels[i] == 1 ? 1.0 : 0.0);

      scale *= 1.0 - eta * config.l2;
      for (const auto& f : x) v[f.index] -= eta * residual * f.value / scale;
      bias -= eta * residual;

      if (scale < 1e-9) {
        for (double& w : v) w *= scale;
        scale = 1.0;
      }
    }

    NGramModel current = snapshot();
    const double metric = dev ? dev(current) : static_cast<double>(epoch);
    result.trace.push_back(EpochRecord{epoch, objective(current), metric});
    dev_metrics.push_back(metric);
    if (select_best_epoch(dev_metrics) + 1 == static_cast<std::size_t>(epoch)) {
      best = std::move(current);
      result.best_epoch = epoch;
    }
  }

  result.model = std::move(*best);
  return result;
}

std::string serialize_model(const NGramModel& model) {
  const FeatureSpec& spec = model.spec();
  std::string out;
  out.reserve(kHeaderBytes + 8 * spec.hash_dim);
  out.append(kMagic, 4);
  put<std::uint32_t>(out, NGramModel::kFormatVersion);
  put<std::uint32_t>(out, spec.hash_dim);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.ngram_min));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.ngram_max));
  put<std::uint32_t>(out, model.use_markup() ? 1u : 0u);
  put<double>(out, model.bias());
  for (double w : model.weights()) put<double>(out, w);
  return out;
}

NGramModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("model file truncated (header)");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a model file (bad magic)");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != NGramModel::kFormatVersion) {
    throw VersionError("model format version " + std::to_string(version) +
                       " is not supported (expected " +
                       std::to_string(NGramModel::kFormatVersion) + ")");
  }
  FeatureSpec spec;
  spec.hash_dim = get<std::uint32_t>(bytes, pos);
  spec.ngram_min = static_cast<int>(get<std::uint32_t>(bytes, pos));
  spec.ngram_max = static_cast<int>(get<std::uint32_t>(bytes, pos));
  const auto flags = get<std::uint32_t>(bytes, pos);
  const double bias = get<double>(bytes, pos);
  if (!is_power_of_two(spec.hash_dim) || spec.ngram_min < 1 ||
      spec.ngram_min > spec.ngram_max || spec.ngram_max > 16 || (flags & ~1u)) {
    throw FormatError("model header is corrupt");
  }
  const std::size_t expected = kHeaderBytes + 8ull * spec.hash_dim;
  if (bytes.size() < expected) throw FormatError("model file truncated (weights)");
  if (bytes.size() > expected) throw FormatError("trailing bytes after model weights");

  NGramModel model(spec, (flags & 1u) != 0);
  model.set_bias(bias);
  std::memcpy(model.weights().data(), bytes.data() + pos, 8ull * spec.hash_dim);
  if (!model.finite()) throw FormatError("model contains non-finite values");
  return model;
}

void save_model(const NGramModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path);
  const std::string bytes = serialize_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing model file " + path);
}

NGramModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace constest
