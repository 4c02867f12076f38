#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "constest/contrastive.hpp"
#include "constest/scorer.hpp"

namespace constest {

// Boundary symbol padded once at each end of the sequence (U+0002).
inline constexpr std::string_view kBoundary = "\x02";

struct Feature {
  std::uint32_t index = 0;
  double value = 0.0;

  friend bool operator==(const Feature&, const Feature&) = default;
};

// Sorted by index, indices unique.
using SparseVector = std::vector<Feature>;

struct FeatureSpec {
  std::uint32_t hash_dim = 1u << 20;
  int ngram_min = 1;
  int ngram_max = 3;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

// FNV-1a 64 over the n-gram: the byte n, then each token followed by 0x1F.
std::uint64_t hash_ngram(std::span<const std::string> ngram);

// Hashed n-gram counts over the boundary-padded token sequence, reduced
// modulo hash_dim (a power of two). Marker tokens count as ordinary tokens.
SparseVector featurize(const Tokens& tokens, const FeatureSpec& spec);

class NGramModel final : public Scorer {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  NGramModel() : NGramModel(FeatureSpec{}) {}
  explicit NGramModel(const FeatureSpec& spec, bool use_markup = false);

  const FeatureSpec& spec() const noexcept { return spec_; }
  bool use_markup() const noexcept { return use_markup_; }
  void set_use_markup(bool v) noexcept { use_markup_ = v; }

  std::vector<double>& weights() noexcept { return weights_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  void set_bias(double b) noexcept { bias_ = b; }

  double logit(const SparseVector& x) const;
  double score(const Tokens& tokens) override;
  double score(const Tokens& tokens) const;

  bool finite() const;

  friend bool operator==(const NGramModel& a, const NGramModel& b) {
    return a.spec_ == b.spec_ && a.use_markup_ == b.use_markup_ && a.bias_ == b.bias_ &&
           a.weights_ == b.weights_;
  }

 private:
  FeatureSpec spec_;
  bool use_markup_ = false;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

// Read-only Scorer over a model owned elsewhere.
class ModelView final : public Scorer {
 public:
  explicit ModelView(const NGramModel& model) : model_(model) {}
  double score(const Tokens& tokens) override { return model_.score(tokens); }

 private:
  const NGramModel& model_;
};

double sigmoid(double z);

// Per-instance objective log(1 + exp(-y z)) + l2/2 |w|^2 with y in {-1, +1}.
double instance_loss(const NGramModel& model, const SparseVector& x, int label, double l2);

struct Gradient {
  SparseVector weights;  // only coordinates present in x
  double bias = 0.0;
};

// Analytic gradient of instance_loss on the coordinates of x and the bias.
Gradient instance_gradient(const NGramModel& model, const SparseVector& x, int label,
                           double l2);

enum class DevMetric { pair_accuracy, classification_accuracy };
std::string to_string(DevMetric metric);
DevMetric parse_dev_metric(std::string_view name);

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.1;  // decays as learning_rate / sqrt(step)
  std::uint64_t seed = 0;
  std::uint32_t hash_dim = 1u << 20;
  double l2 = 1e-6;
  DevMetric dev_metric = DevMetric::pair_accuracy;
  int ngram_min = 1;
  int ngram_max = 3;

  void validate() const;
};

// Scores an epoch snapshot; higher is better.
using DevEvaluator = std::function<double(const NGramModel&)>;

struct EpochRecord {
  int epoch = 0;  // 0 is the untrained model
  double train_loss = 0.0;
  double dev_metric = 0.0;
};

struct TrainResult {
  NGramModel model;
  int best_epoch = 0;
  std::vector<EpochRecord> trace;
};

// First index of the maximum; ties go to the earlier entry.
std::size_t select_best_epoch(std::span<const double> metrics);

// Logistic-loss SGD over seed-shuffled instances. After every epoch the
// snapshot is scored with `dev`; the best snapshot is returned. Without a dev
// evaluator the last epoch wins.
TrainResult train(const Dataset& train_set, const DevEvaluator& dev,
                  const TrainConfig& config);

double classification_accuracy(const NGramModel& model, const Dataset& data);
double mean_loss(const NGramModel& model, const Dataset& data, double l2);
DevEvaluator classification_accuracy_evaluator(Dataset held_out);

// Binary model file, little-endian:
//   char[4] "CTNG" | u32 version | u32 hash_dim | u32 ngram_min | u32 ngram_max
//   | u32 flags (bit 0: use_markup) | f64 bias | f64 weights[hash_dim]
void save_model(const NGramModel& model, const std::string& path);
NGramModel load_model(const std::string& path);
std::string serialize_model(const NGramModel& model);
NGramModel deserialize_model(std::string_view bytes);

}  // namespace constest
