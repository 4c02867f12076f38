#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "constest/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / ("constest_cli_" + std::to_string(::getpid()) + "_" +
                                       std::to_string(counter()++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }

  Result run(const std::string& args) const {
    const std::string out = (dir / ".stdout").string(), err = (dir / ".stderr").string();
    const std::string cmd = "cd '" + dir.string() + "' && " CONSTEST_CLI_PATH " " + args + " >'" +
                            out + "' 2>'" + err + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = constest::read_file(out);
    r.err = constest::read_file(err);
    return r;
  }
};

const std::string kSample = CONSTEST_DATA_DIR "/sample.mrg";

}  // namespace

TEST_CASE("cli: make-pairs reproduces the golden file and writes a manifest") {
  Workdir w;
  const auto r = w.run("make-pairs --treebank " + kSample + " --out pairs.jsonl --seed 42");
  REQUIRE(r.code == 0);
  CHECK(constest::read_file(w / "pairs.jsonl") ==
        constest::read_file(CONSTEST_DATA_DIR "/sample_pairs_seed42.jsonl"));
  const auto manifest = json::parse(constest::read_file(w / "manifest.json"));
  REQUIRE(manifest["runs"].size() == 1);
  const auto& run = manifest["runs"]["pairs.jsonl"];
  CHECK(run["command"] == "make-pairs");
  CHECK(run["seed"] == 42);
  CHECK(run["flags"]["min-tokens"] == "3");
  CHECK(run["extra"]["pairs"] == 20);
}

TEST_CASE("cli: errors are JSON objects on stderr") {
  Workdir w;
  fs::create_directories(w / "empty");
  auto r = w.run("make-pairs --treebank empty --out pairs.jsonl");
  CHECK(r.code == 1);
  const auto err = json::parse(r.err);
  CHECK(err["error"]["type"] == "data_error");
  CHECK_FALSE(fs::exists(w / "pairs.jsonl"));

  std::ofstream(w / "bad.mrg") << "( (S (NP (DT a) (NN b)) \n";
  r = w.run("make-pairs --treebank bad.mrg --out pairs.jsonl");
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"]["type"] == "parse_error");
  CHECK(r.err.find("bad.mrg") != std::string::npos);

  r = w.run("make-pairs --out x");
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"]["type"] == "usage_error");
}

TEST_CASE("cli: build-data determinism and empty focused output") {
  Workdir w;
  REQUIRE(w.run("extract-text --treebank " + kSample + " --out corpus.txt").code == 0);
  REQUIRE(w.run("build-data --corpus corpus.txt --scheme nonfocused --seed 3 --out a.jsonl").code == 0);
  REQUIRE(w.run("build-data --corpus corpus.txt --scheme nonfocused --seed 3 --out b.jsonl").code == 0);
  CHECK(constest::read_file(w / "a.jsonl") == constest::read_file(w / "b.jsonl"));
  CHECK(constest::load_dataset(w / "a.jsonl").instances.size() == 40);

  std::ofstream(w / "plain.txt") << "the cat sat on the mat .\na dog ran .\n";
  const auto r = w.run("build-data --corpus plain.txt --scheme focused --tests did_so,this_way --out f.jsonl");
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(constest::load_dataset(w / "f.jsonl").instances.empty());
}

TEST_CASE("cli: train, evaluate, select, replay") {
  Workdir w;
  REQUIRE(w.run("make-pairs --treebank " + kSample + " --out pairs.jsonl --seed 1").code == 0);
  REQUIRE(w.run("extract-text --treebank " + kSample + " --out corpus.txt").code == 0);
  REQUIRE(w.run("build-data --corpus corpus.txt --scheme focused --seed 1 --out focused.jsonl").code == 0);

  auto r = w.run("train --data focused.jsonl --no-markup --out m.bin");
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"]["message"].get<std::string>().find("scheme mismatch") !=
        std::string::npos);

  r = w.run("train --data focused.jsonl --dev-pairs pairs.jsonl --epochs 1 --hash-bits 12 --out model.bin");
  REQUIRE(r.code == 0);
  auto manifest = json::parse(constest::read_file(w / "manifest.json"));
  CHECK(manifest["runs"]["model.bin"]["extra"]["trace"].size() == 2);
  CHECK(manifest["runs"]["model.bin"]["extra"]["best_epoch"] == 1);

  r = w.run("evaluate --model model.bin --pairs pairs.jsonl --tests this_way,did_so,of_it,it --out report.json");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("accuracy") != std::string::npos);
  const auto report = json::parse(constest::read_file(w / "report.json"));
  CHECK(report["tests"].size() == 4);
  CHECK(report["use_markup"] == true);

  r = w.run("evaluate --model model.bin --no-markup --pairs pairs.jsonl");
  CHECK(r.code == 1);

  r = w.run("select-proforms --model model.bin --dev-pairs pairs.jsonl --max-k 4 --out trace.json");
  REQUIRE(r.code == 0);
  const auto trace = json::parse(constest::read_file(w / "trace.json"));
  CHECK(trace["selected"].size() <= 4);

  fs::create_directories(w / "again");
  r = w.run("replay manifest.json --out-dir again");
  REQUIRE(r.code == 0);
  for (const char* f : {"pairs.jsonl", "corpus.txt", "focused.jsonl", "model.bin", "report.json", "trace.json"}) {
    CHECK(constest::read_file(w / f) == constest::read_file(w / (std::string("again/") + f)));
  }
  CHECK(fs::exists(w / "again/manifest.json"));
}

TEST_CASE("cli: external scorer") {
  Workdir w;
  REQUIRE(w.run("make-pairs --treebank " + kSample + " --out pairs.jsonl").code == 0);
  auto r = w.run("evaluate --external '" STUB_SCORER_PATH " --mode constant --value 0.5' --pairs pairs.jsonl");
  CHECK(r.code == 0);
  CHECK(r.out.find("0.0000") != std::string::npos);

  r = w.run("evaluate --external '" STUB_SCORER_PATH " --mode error-response' --pairs pairs.jsonl");
  CHECK(r.code == 1);
  const auto err = json::parse(r.err);
  CHECK(err["error"]["type"] == "protocol_error");
  CHECK(err["error"]["message"].get<std::string>().find("model not loaded") != std::string::npos);
}
