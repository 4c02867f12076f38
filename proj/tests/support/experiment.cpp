#include "experiment.hpp"

#include "constest/contrastive.hpp"
#include "constest/error.hpp"
#include "toy_grammar.hpp"

namespace toy {

using namespace constest;

std::vector<EvalPair> toy_pairs(std::size_t count, std::uint64_t seed, const std::string& prefix) {
  std::vector<EvalPair> out;
  for (std::uint64_t round = 0; out.size() < count; ++round) {
    if (round > 100) throw ContractViolation("toy grammar yields too few pairs");
    const auto trees = generate_trees(count, derive_seed(seed, round), prefix + std::to_string(round));
    for (auto& p : build_eval_set(trees, derive_seed(seed, 1000 + round))) {
      if (out.size() == count) break;
      out.push_back(std::move(p));
    }
  }
  return out;
}

ExperimentOutcome run_experiment(std::uint64_t seed, const ExperimentConfig& config) {
  const TestSet tests = default_inventory().subset(config.tests);
  std::vector<Sentence> corpus;
  for (auto& t : generate_trees(config.train_sentences, derive_seed(seed, 1), "train")) {
    corpus.push_back(std::move(t.sentence));
  }
  const auto dev = toy_pairs(config.dev_pairs, derive_seed(seed, 2), "dev");
  const auto test = toy_pairs(config.test_pairs, derive_seed(seed, 3), "test");

  TrainConfig cfg;
  cfg.epochs = config.epochs;
  cfg.seed = derive_seed(seed, 4);
  cfg.hash_dim = config.hash_dim;

  auto run_scheme = [&](const Dataset& data) {
    const auto result = train(data, pair_accuracy_evaluator(dev, tests), cfg);
    SchemeOutcome out;
    out.best_epoch = result.best_epoch;
    NGramModel model = result.model;
    ScoreCache cache;
    for (auto st : {Strategy::maximum, Strategy::average, Strategy::voting}) {
      out.accuracy[st] = evaluate_pairs(model, test, tests, st, model.use_markup(), &cache).accuracy;
    }
    return out;
  };

  ExperimentOutcome outcome;
  outcome.focused = run_scheme(build_focused(corpus, tests, seed));
  outcome.nonfocused = run_scheme(build_nonfocused(corpus, tests, seed));
  return outcome;
}

}  // namespace toy
