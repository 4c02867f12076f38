#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "constest/error.hpp"
#include "constest/io.hpp"

using namespace constest;

TEST_CASE("sample treebank loads with traces and tags removed") {
  const auto trees = load_treebank(CONSTEST_DATA_DIR "/sample.mrg");
  REQUIRE(trees.size() == 20);
  CHECK(trees[0].sentence.id == "sample:0");
  CHECK(join(trees[2].sentence.tokens) == "He wanted to leave .");
  CHECK(join(trees[5].sentence.tokens) == "Prices rose , said the analyst .");
  CHECK(join(trees[16].sentence.tokens) == "Look at it !");
  for (const auto& t : trees) {
    CHECK_NOTHROW(t.validate());
    for (const auto& tok : t.sentence.tokens) CHECK(tok != "-NONE-");
  }
}

TEST_CASE("treebank directory listing") {
  const auto dir = std::filesystem::temp_directory_path() / "constest_tb";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "sub");
  std::ofstream(dir / "b.mrg") << "( (S (NP (DT a) (NN b)) (VP (VBD c))) )\n";
  std::ofstream(dir / "sub" / "a.tree") << "( (S (NP (DT x) (NN y)) (VP (VBD z))) )\n";
  std::ofstream(dir / "notes.txt") << "ignored\n";
  const auto files = list_treebank_files(dir.string());
  REQUIRE(files.size() == 2);
  CHECK(files[0] < files[1]);
  CHECK(load_treebank(dir.string()).size() == 2);

  std::ofstream(dir / "c.mrg") << "( (S (NP (DT a)) \n";
  try {
    load_treebank(dir.string());
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("c.mrg") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(list_treebank_files(dir.string()), DataError);
}

TEST_CASE("pairs JSONL round trip") {
  const auto trees = load_treebank(CONSTEST_DATA_DIR "/sample.mrg");
  const auto pairs = build_eval_set(trees, 42);
  std::ostringstream out;
  write_pairs_jsonl(out, pairs);
  std::istringstream in(out.str());
  const auto back = read_pairs_jsonl(in);
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(back[i].sentence.id == pairs[i].sentence.id);
    CHECK(back[i].sentence.tokens == pairs[i].sentence.tokens);
    CHECK(back[i].constituent == pairs[i].constituent);
    CHECK(back[i].distractor == pairs[i].distractor);
  }
  std::istringstream bad(R"({"sentence_id":"x","tokens":["a","b"],"constituent":[0,3],"distractor":[0,1]})");
  CHECK_THROWS_AS(read_pairs_jsonl(bad), DataError);
}

TEST_CASE("golden pairs for the sample treebank") {
  const auto trees = load_treebank(CONSTEST_DATA_DIR "/sample.mrg");
  std::ostringstream out;
  write_pairs_jsonl(out, build_eval_set(trees, 42));
  CHECK(out.str() == read_file(CONSTEST_DATA_DIR "/sample_pairs_seed42.jsonl"));
}

TEST_CASE("corpus reader") {
  std::istringstream in("the cat sat .\n\n  a  dog ran \n");
  const auto corpus = read_corpus(in, "c");
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].id == "c:1");
  CHECK(corpus[1].id == "c:3");
  CHECK(corpus[1].tokens == Tokens{"a", "dog", "ran"});
  std::istringstream marked("a <S> b <E>\n");
  CHECK_THROWS_AS(read_corpus(marked, "c"), DataError);
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.txt"), DataError);
}
