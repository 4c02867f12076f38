#include "constest/analysis.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "constest/error.hpp"

namespace constest {

namespace {

struct PendingScore {
  ScoreCache::Key key;
  double* slot;
};

// Scores every (span, test) cell, consulting and filling the cache, with a
// single batch call for all misses.
void fill_scores(Scorer& scorer, const std::vector<const Sentence*>& sentences,
                 std::vector<SpanScores>& out, const TestSet& tests, bool use_markup,
                 ScoreCache* cache) {
  std::vector<Tokens> inputs;
  std::vector<PendingScore> pending;
  for (std::size_t k = 0; k < out.size(); ++k) {
    SpanScores& ss = out[k];
    const Sentence& s = *sentences[k];
    if (!ss.span.valid_for(s.size())) {
      throw ContractViolation("span " + to_string(ss.span) + " invalid in " + s.id);
    }
    ss.test_ids = tests.ids();
    ss.scores.assign(tests.size(), 0.0);
    for (std::size_t t = 0; t < tests.size(); ++t) {
      ScoreCache::Key key{s.id, ss.span, tests[t].id, use_markup};
      if (cache) {
        if (const double* hit = cache->find(key)) {
          ss.scores[t] = *hit;
          continue;
        }
      }
      inputs.push_back(transformed_input(s, ss.span, tests[t], use_markup));
      pending.push_back(PendingScore{std::move(key), &ss.scores[t]});
    }
  }
  if (inputs.empty()) return;
  const auto values = scorer.score_batch(inputs);
  if (values.size() != inputs.size()) {
    throw ContractViolation("scorer returned a batch of the wrong size");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ContractViolation("scorer returned a value outside [0,1]");
    }
    *pending[i].slot = v;
    if (cache) cache->insert(std::move(pending[i].key), v);
  }
}

void require_same_tests(const SpanScores& a, const SpanScores& b) {
  if (a.test_ids != b.test_ids || a.scores.size() != b.scores.size()) {
    throw ContractViolation("span scores computed over different test sets");
  }
}

Outcome compare_scalar(double a, double b) {
  if (a > b) return Outcome::a_wins;
  if (b > a) return Outcome::b_wins;
  return Outcome::tie;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::maximum: return "maximum";
    case Strategy::average: return "average";
    case Strategy::voting: return "voting";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "maximum" || name == "max") return Strategy::maximum;
  if (name == "average" || name == "avg") return Strategy::average;
  if (name == "voting" || name == "vote") return Strategy::voting;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::a_wins: return "a_wins";
    case Outcome::b_wins: return "b_wins";
    case Outcome::tie: return "tie";
  }
  return "unknown";
}

const double* ScoreCache::find(const Key& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

Tokens transformed_input(const Sentence& s, const Span& x, const ProForm& t, bool use_markup) {
  Sentence transformed = apply_test(s, x, t);
  if (!use_markup) return std::move(transformed.tokens);
  return markup(transformed, inserted_span(x, t)).tokens;
}

SpanScores span_scores(Scorer& scorer, const Sentence& s, const Span& x, const TestSet& tests,
                       bool use_markup, ScoreCache* cache) {
  std::vector<SpanScores> out(1);
  out[0].sentence_id = s.id;
  out[0].span = x;
  fill_scores(scorer, {&s}, out, tests, use_markup, cache);
  return std::move(out[0]);
}

double combine(const SpanScores& scores, Strategy strategy) {
  if (scores.scores.empty()) throw ContractViolation("no scores to combine");
  switch (strategy) {
    case Strategy::maximum:
      return *std::max_element(scores.scores.begin(), scores.scores.end());
    case Strategy::average:
      return std::accumulate(scores.scores.begin(), scores.scores.end(), 0.0) /
             static_cast<double>(scores.scores.size());
    case Strategy::voting:
      break;
  }
  throw ContractViolation("voting has no scalar combination");
}

Outcome compare_spans(const SpanScores& a, const SpanScores& b, Strategy strategy) {
  require_same_tests(a, b);
  if (strategy != Strategy::voting) {
    return compare_scalar(combine(a, strategy), combine(b, strategy));
  }
  std::size_t a_votes = 0;
  std::size_t b_votes = 0;
  for (std::size_t t = 0; t < a.scores.size(); ++t) {
    a_votes += a.scores[t] > b.scores[t];
    b_votes += b.scores[t] > a.scores[t];
  }
  // Strict majority: votes > |T| / 2.
  const std::size_t n = a.scores.size();
  if (2 * a_votes > n) return Outcome::a_wins;
  if (2 * b_votes > n) return Outcome::b_wins;
  return compare_scalar(combine(a, Strategy::maximum), combine(b, Strategy::maximum));
}

EvalReport evaluate_pairs(Scorer& scorer, const std::vector<EvalPair>& pairs,
                          const TestSet& tests, Strategy strategy, bool use_markup,
                          ScoreCache* cache) {
  if (pairs.empty()) throw ContractViolation("evaluate_pairs needs at least one pair");

  std::vector<SpanScores> cells(2 * pairs.size());
  std::vector<const Sentence*> sentences(2 * pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    cells[2 * i] = SpanScores{pairs[i].sentence.id, pairs[i].constituent, {}, {}};
    cells[2 * i + 1] = SpanScores{pairs[i].sentence.id, pairs[i].distractor, {}, {}};
    sentences[2 * i] = sentences[2 * i + 1] = &pairs[i].sentence;
  }
  fill_scores(scorer, sentences, cells, tests, use_markup, cache);

  EvalReport report;
  report.n = pairs.size();
  report.strategy = strategy;
  report.tests = tests.ids();
  report.use_markup = use_markup;
  report.pairs.reserve(pairs.size());
  const Strategy scalar = strategy == Strategy::voting ? Strategy::maximum : strategy;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SpanScores& c = cells[2 * i];
    const SpanScores& d = cells[2 * i + 1];
    PairRecord rec;
    rec.sentence_id = pairs[i].sentence.id;
    rec.constituent = pairs[i].constituent;
    rec.distractor = pairs[i].distractor;
    rec.constituent_best_test = c.test_ids[argmax(c.scores)];
    rec.distractor_best_test = d.test_ids[argmax(d.scores)];
    rec.constituent_score = combine(c, scalar);
    rec.distractor_score = combine(d, scalar);
    rec.outcome = compare_spans(c, d, strategy);
    rec.correct = rec.outcome == Outcome::a_wins;
    correct += rec.correct;
    report.pairs.push_back(std::move(rec));
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(pairs.size());
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["n"] = report.n;
  j["strategy"] = to_string(report.strategy);
  j["tests"] = report.tests;
  j["use_markup"] = report.use_markup;
  auto& pairs = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& r : report.pairs) {
    nlohmann::ordered_json p;
    p["sentence_id"] = r.sentence_id;
    p["constituent"] = {r.constituent.start, r.constituent.end};
    p["distractor"] = {r.distractor.start, r.distractor.end};
    p["constituent_best_test"] = r.constituent_best_test;
    p["distractor_best_test"] = r.distractor_best_test;
    p["constituent_score"] = r.constituent_score;
    p["distractor_score"] = r.distractor_score;
    p["decision"] = r.outcome == Outcome::a_wins   ? "constituent"
                    : r.outcome == Outcome::b_wins ? "distractor"
                                                   : "tie";
    p["correct"] = r.correct;
    pairs.push_back(std::move(p));
  }
  return j;
}

std::string report_summary(const EvalReport& report) {
  std::size_t c_wins = 0, d_wins = 0, ties = 0;
  for (const auto& r : report.pairs) {
    if (r.outcome == Outcome::a_wins) ++c_wins;
    else if (r.outcome == Outcome::b_wins) ++d_wins;
    else ++ties;
  }
  std::ostringstream out;
  out << "strategy     " << to_string(report.strategy) << "\n"
      << "tests        " << join(report.tests, ",") << "\n"
      << "markup       " << (report.use_markup ? "yes" : "no") << "\n"
      << "pairs        " << report.n << "\n"
      << "constituent  " << c_wins << "\n"
      << "distractor   " << d_wins << "\n"
      << "tie          " << ties << "\n"
      << "accuracy     " << std::fixed << std::setprecision(4) << report.accuracy << "\n";
  return out.str();
}

GreedyResult greedy_select(Scorer& scorer, const std::vector<EvalPair>& dev_pairs,
                           const TestSet& candidates, std::size_t max_k, bool use_markup) {
  if (max_k > candidates.size()) {
    throw ContractViolation("max_k exceeds the number of candidate tests");
  }
  GreedyResult result;
  if (max_k == 0 || dev_pairs.empty()) return result;

  // One scoring pass; every subset is then evaluated from this table.
  std::vector<SpanScores> cells(2 * dev_pairs.size());
  std::vector<const Sentence*> sentences(2 * dev_pairs.size());
  for (std::size_t i = 0; i < dev_pairs.size(); ++i) {
    cells[2 * i] = SpanScores{dev_pairs[i].sentence.id, dev_pairs[i].constituent, {}, {}};
    cells[2 * i + 1] = SpanScores{dev_pairs[i].sentence.id, dev_pairs[i].distractor, {}, {}};
    sentences[2 * i] = sentences[2 * i + 1] = &dev_pairs[i].sentence;
  }
  ScoreCache cache;
  fill_scores(scorer, sentences, cells, candidates, use_markup, &cache);

  const std::size_t n_pairs = dev_pairs.size();
  // Running maxima of the selected tests per pair side.
  std::vector<double> c_best(n_pairs, -1.0), d_best(n_pairs, -1.0);
  std::vector<bool> used(candidates.size(), false);
  double current = 0.0;

  while (result.selected.size() < max_k) {
    std::optional<std::size_t> best_t;
    double best_acc = -1.0;
    for (std::size_t t = 0; t < candidates.size(); ++t) {
      if (used[t]) continue;
      std::size_t correct = 0;
      for (std::size_t i = 0; i < n_pairs; ++i) {
        const double c = std::max(c_best[i], cells[2 * i].scores[t]);
        const double d = std::max(d_best[i], cells[2 * i + 1].scores[t]);
        correct += c > d;
      }
      const double acc = static_cast<double>(correct) / static_cast<double>(n_pairs);
      if (acc > best_acc) {
        best_acc = acc;
        best_t = t;
      }
    }
    if (!best_t || !(best_acc > current)) break;
    used[*best_t] = true;
    for (std::size_t i = 0; i < n_pairs; ++i) {
      c_best[i] = std::max(c_best[i], cells[2 * i].scores[*best_t]);
      d_best[i] = std::max(d_best[i], cells[2 * i + 1].scores[*best_t]);
    }
    current = best_acc;
    result.selected.push_back(candidates[*best_t].id);
    result.trace.push_back(GreedyStep{candidates[*best_t].id, best_acc});
  }
  return result;
}

nlohmann::ordered_json greedy_to_json(const GreedyResult& result) {
  nlohmann::ordered_json j;
  j["selected"] = result.selected;
  auto& trace = j["trace"] = nlohmann::ordered_json::array();
  std::vector<std::string> prefix;
  for (const auto& step : result.trace) {
    prefix.push_back(step.test_id);
    trace.push_back({{"added", step.test_id}, {"tests", prefix}, {"accuracy", step.accuracy}});
  }
  return j;
}

DevEvaluator pair_accuracy_evaluator(std::vector<EvalPair> pairs, TestSet tests,
                                     Strategy strategy) {
  return [pairs = std::move(pairs), tests = std::move(tests), strategy](const NGramModel& model) {
    ModelView scorer(model);
    return evaluate_pairs(scorer, pairs, tests, strategy, model.use_markup()).accuracy;
  };
}

}  // namespace constest
