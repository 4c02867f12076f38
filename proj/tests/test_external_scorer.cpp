#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "constest/analysis.hpp"
#include "constest/error.hpp"
#include "constest/external_scorer.hpp"
#include "constest/ngram_model.hpp"
#include "support/toy_grammar.hpp"

using namespace constest;
using namespace std::chrono_literals;

namespace {

std::vector<std::string> stub(std::vector<std::string> args) {
  args.insert(args.begin(), STUB_SCORER_PATH);
  return args;
}

ExternalScorerOptions quick() {
  ExternalScorerOptions o;
  o.handshake_timeout = 2s;
  o.batch_timeout = 5s;
  o.shutdown_grace = 500ms;
  return o;
}

double fnv_score(const Tokens& tokens) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens) {
    for (unsigned char c : t) h = (h ^ c) * 0x100000001b3ULL;
    h = (h ^ 0x1f) * 0x100000001b3ULL;
  }
  return static_cast<double>(h % 1000) / 1000.0;
}

}  // namespace

TEST_CASE("connect, constant scores, clean shutdown") {
  auto scorer = ExternalScorer::connect(stub({"--mode", "constant", "--value", "0.5"}), quick());
  CHECK(scorer.connected());
  const std::vector<Tokens> inputs{{"a"}, {"b", "c"}, {"d"}};
  CHECK(scorer.score_batch(inputs) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(scorer.requests_sent() == 3);
  const auto first = scorer.shutdown();
  CHECK(first.exit_code == 0);
  CHECK_FALSE(first.forced);
  const auto second = scorer.shutdown();
  CHECK(second.exit_code == first.exit_code);
  CHECK_THROWS_AS(scorer.score(Tokens{"x"}), ProtocolError);
}

TEST_CASE("token-count scores are recomputable") {
  auto scorer = ExternalScorer::connect(stub({"--mode", "tokmod"}), quick());
  std::vector<Tokens> inputs;
  for (std::size_t n = 0; n < 25; ++n) inputs.push_back(Tokens(n, "w"));
  const auto scores = scorer.score_batch(inputs);
  for (std::size_t n = 0; n < 25; ++n) CHECK(scores[n] == static_cast<double>(n % 10) / 10.0);
}

TEST_CASE("out-of-order responses are realigned") {
  SUBCASE("reversed groups") {
    auto scorer = ExternalScorer::connect(stub({"--mode", "hash", "--group", "8"}), quick());
    std::vector<Tokens> inputs;
    for (int i = 0; i < 64; ++i) inputs.push_back({"tok" + std::to_string(i), "x"});
    const auto scores = scorer.score_batch(inputs);
    for (std::size_t i = 0; i < inputs.size(); ++i) CHECK(scores[i] == fnv_score(inputs[i]));
  }
  SUBCASE("random permutations") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto scorer = ExternalScorer::connect(
          stub({"--mode", "hash", "--group", "20", "--shuffle-seed", std::to_string(seed)}),
          quick());
      std::vector<Tokens> inputs;
      for (int i = 0; i < 100; ++i) inputs.push_back({"s" + std::to_string(seed), std::to_string(i)});
      const auto scores = scorer.score_batch(inputs);
      for (std::size_t i = 0; i < inputs.size(); ++i) CHECK(scores[i] == fnv_score(inputs[i]));
    }
  }
}

TEST_CASE("markers and unusual tokens pass through verbatim") {
  auto scorer = ExternalScorer::connect(stub({"--mode", "hash"}), quick());
  const std::vector<Tokens> inputs{{"<S>", "did", "so", "<E>", "."},
                                   {"caf\xc3\xa9", "\"quoted\"", "back\\slash"},
                                   {}};
  const auto scores = scorer.score_batch(inputs);
  for (std::size_t i = 0; i < inputs.size(); ++i) CHECK(scores[i] == fnv_score(inputs[i]));
}

TEST_CASE("large batches do not deadlock") {
  auto scorer = ExternalScorer::connect(stub({"--mode", "tokmod"}), quick());
  std::vector<Tokens> inputs(20000, Tokens(12, "abcdefgh"));
  const auto scores = scorer.score_batch(inputs);
  CHECK(scores.size() == inputs.size());
  CHECK(scores.back() == 0.2);
}

TEST_CASE("handshake failures") {
  CHECK_THROWS_AS(ExternalScorer::connect(stub({"--mode", "garbage"}), quick()), ProtocolError);
  CHECK_THROWS_AS(ExternalScorer::connect(stub({"--mode", "wrong-protocol"}), quick()),
                  ProtocolError);
  CHECK_THROWS_AS(ExternalScorer::connect(stub({"--mode", "exit"}), quick()), SpawnError);
  CHECK_THROWS_AS(ExternalScorer::connect({"/nonexistent/scorer-binary"}, quick()), SpawnError);
  auto opts = quick();
  opts.handshake_timeout = 200ms;
  CHECK_THROWS_AS(ExternalScorer::connect(stub({"--mode", "silent"}), opts), TimeoutError);
}

TEST_CASE("response errors") {
  SUBCASE("out of range") {
    auto scorer = ExternalScorer::connect(stub({"--mode", "out-of-range"}), quick());
    CHECK_THROWS_AS(scorer.score(Tokens{"a"}), ProtocolError);
    CHECK_FALSE(scorer.connected());
  }
  SUBCASE("error object is surfaced verbatim") {
    auto scorer = ExternalScorer::connect(stub({"--mode", "error-response"}), quick());
    try {
      scorer.score(Tokens{"a"});
      FAIL("expected error");
    } catch (const ProtocolError& e) {
      CHECK(std::string(e.what()).find("model not loaded") != std::string::npos);
    }
  }
  SUBCASE("unknown id") {
    auto scorer = ExternalScorer::connect(stub({"--mode", "bad-id"}), quick());
    CHECK_THROWS_AS(scorer.score(Tokens{"a"}), ProtocolError);
  }
  SUBCASE("batch timeout") {
    auto opts = quick();
    opts.batch_timeout = 200ms;
    auto scorer = ExternalScorer::connect(stub({"--mode", "mute"}), opts);
    CHECK_THROWS_AS(scorer.score(Tokens{"a"}), TimeoutError);
  }
}

TEST_CASE("hung scorer is killed after the grace period") {
  auto scorer = ExternalScorer::connect(stub({"--mode", "hang"}), quick());
  const auto start = std::chrono::steady_clock::now();
  const auto result = scorer.shutdown();
  CHECK(result.forced);
  CHECK(std::chrono::steady_clock::now() - start < 3s);
}

TEST_CASE("shell command lines") {
  auto scorer = ExternalScorer::connect_shell(std::string(STUB_SCORER_PATH) + " --mode constant --value 0.25",
                                              quick());
  CHECK(scorer.score(Tokens{"a"}) == 0.25);
}

TEST_CASE("external stub serving the built-in model gives identical evaluation") {
  const auto trees = toy::generate_trees(120, 6);
  const auto pairs = build_eval_set(trees, 3);
  const auto tests = default_inventory().subset({"it", "did_so", "of_it"});
  std::vector<Sentence> corpus;
  for (const auto& t : trees) corpus.push_back(t.sentence);
  const auto data = build_nonfocused(corpus, tests, 4);
  TrainConfig cfg;
  cfg.hash_dim = 1u << 14;
  cfg.epochs = 3;
  const auto model = train(data, nullptr, cfg).model;
  const auto path = (std::filesystem::temp_directory_path() / "constest_stub_model.bin").string();
  save_model(model, path);

  auto external = ExternalScorer::connect(stub({"--mode", "model", "--model", path}), quick());
  NGramModel local = model;
  for (auto st : {Strategy::maximum, Strategy::average, Strategy::voting}) {
    const auto a = evaluate_pairs(local, pairs, tests, st, false);
    const auto b = evaluate_pairs(external, pairs, tests, st, false);
    CHECK(a.accuracy == b.accuracy);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      CHECK(a.pairs[i].constituent_score == b.pairs[i].constituent_score);
      CHECK(a.pairs[i].distractor_score == b.pairs[i].distractor_score);
    }
  }
  std::filesystem::remove(path);
}
