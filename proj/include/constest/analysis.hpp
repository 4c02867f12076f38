#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "constest/ngram_model.hpp"
#include "constest/proform.hpp"
#include "constest/scorer.hpp"
#include "constest/treebank.hpp"

namespace constest {

enum class Strategy { maximum, average, voting };
std::string to_string(Strategy strategy);
Strategy parse_strategy(std::string_view name);

// alpha(t(s, x)) for every test t, aligned with test_ids.
struct SpanScores {
  std::string sentence_id;
  Span span;
  std::vector<std::string> test_ids;
  std::vector<double> scores;
};

// Memo of scorer outputs keyed by (sentence id, span, test id, use_markup).
class ScoreCache {
 public:
  using Key = std::tuple<std::string, Span, std::string, bool>;

  const double* find(const Key& key) const;
  void insert(Key key, double value) { entries_.emplace(std::move(key), value); }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<Key, double> entries_;
};

// The token sequence the scorer sees for test t applied to span x.
Tokens transformed_input(const Sentence& s, const Span& x, const ProForm& t, bool use_markup);

SpanScores span_scores(Scorer& scorer, const Sentence& s, const Span& x, const TestSet& tests,
                       bool use_markup, ScoreCache* cache = nullptr);

// Scalar combination; voting is pairwise only and throws ContractViolation.
double combine(const SpanScores& scores, Strategy strategy);

enum class Outcome { a_wins, b_wins, tie };
std::string to_string(Outcome outcome);

// Voting ties fall back to the maximum comparison.
Outcome compare_spans(const SpanScores& a, const SpanScores& b, Strategy strategy);

struct PairRecord {
  std::string sentence_id;
  Span constituent;
  Span distractor;
  std::string constituent_best_test;
  std::string distractor_best_test;
  double constituent_score = 0.0;  // combined (maximum for voting)
  double distractor_score = 0.0;
  Outcome outcome = Outcome::tie;
  bool correct = false;
};

struct EvalReport {
  double accuracy = 0.0;
  std::size_t n = 0;
  Strategy strategy = Strategy::maximum;
  std::vector<std::string> tests;
  bool use_markup = false;
  std::vector<PairRecord> pairs;
};

// A pair is correct iff the constituent strictly wins after tie-breaking.
EvalReport evaluate_pairs(Scorer& scorer, const std::vector<EvalPair>& pairs,
                          const TestSet& tests, Strategy strategy, bool use_markup,
                          ScoreCache* cache = nullptr);

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string report_summary(const EvalReport& report);

struct GreedyStep {
  std::string test_id;
  double accuracy = 0.0;
};

struct GreedyResult {
  std::vector<std::string> selected;
  std::vector<GreedyStep> trace;
};

// Forward selection under the maximum strategy: add the candidate giving the
// highest accuracy (earliest on ties) while it strictly improves on the
// current set and fewer than max_k are selected.
GreedyResult greedy_select(Scorer& scorer, const std::vector<EvalPair>& dev_pairs,
                           const TestSet& candidates, std::size_t max_k, bool use_markup);

nlohmann::ordered_json greedy_to_json(const GreedyResult& result);

// Dev evaluator for train(): pair accuracy of the snapshot on `pairs`.
DevEvaluator pair_accuracy_evaluator(std::vector<EvalPair> pairs, TestSet tests,
                                     Strategy strategy = Strategy::maximum);

}  // namespace constest
