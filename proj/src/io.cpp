#include "constest/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "constest/error.hpp"

namespace constest {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

Span span_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("span must be [start, end]");
  return Span{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

template <typename Fn>
void for_each_json_line(std::istream& in, const std::string& name, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line), line_no);
    } catch (const json::exception& e) {
      throw DataError(name + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace

void write_pairs_jsonl(std::ostream& out, const std::vector<EvalPair>& pairs) {
  for (const auto& p : pairs) {
    ordered_json j;
    j["sentence_id"] = p.sentence.id;
    j["tokens"] = p.sentence.tokens;
    j["constituent"] = {p.constituent.start, p.constituent.end};
    j["distractor"] = {p.distractor.start, p.distractor.end};
    out << j.dump() << '\n';
  }
}

std::vector<EvalPair> read_pairs_jsonl(std::istream& in, const std::string& name) {
  std::vector<EvalPair> pairs;
  for_each_json_line(in, name, [&](const json& j, std::size_t) {
    EvalPair p;
    p.sentence.id = j.at("sentence_id").get<std::string>();
    p.sentence.tokens = j.at("tokens").get<Tokens>();
    p.constituent = span_from_json(j.at("constituent"));
    p.distractor = span_from_json(j.at("distractor"));
    const std::size_t n = p.sentence.size();
    if (!p.constituent.valid_for(n) || !p.distractor.valid_for(n)) {
      throw DataError("span out of range");
    }
    if (p.constituent.length() != p.distractor.length()) {
      throw DataError("constituent and distractor lengths differ");
    }
    pairs.push_back(std::move(p));
  });
  return pairs;
}

std::vector<EvalPair> load_pairs(const std::string& path) {
  auto in = open_input(path);
  return read_pairs_jsonl(in, path);
}

void write_dataset_jsonl(std::ostream& out, const Dataset& dataset) {
  ordered_json header;
  header["scheme"] = to_string(dataset.scheme);
  header["seed"] = dataset.provenance.seed;
  header["tests"] = dataset.provenance.tests;
  header["corpus"] = dataset.provenance.corpus;
  out << header.dump() << '\n';
  for (const auto& inst : dataset.instances) {
    ordered_json j;
    j["tokens"] = inst.tokens;
    j["label"] = inst.label;
    j["test_id"] = inst.test_id ? ordered_json(*inst.test_id) : ordered_json(nullptr);
    j["marker_span"] = inst.marker_span
                           ? ordered_json{inst.marker_span->start, inst.marker_span->end}
                           : ordered_json(nullptr);
    j["source_id"] = inst.source_id;
    out << j.dump() << '\n';
  }
}

Dataset read_dataset_jsonl(std::istream& in, const std::string& name) {
  Dataset ds;
  bool have_header = false;
  for_each_json_line(in, name, [&](const json& j, std::size_t) {
    if (!have_header) {
      if (!j.contains("scheme")) throw DataError("missing dataset header line");
      ds.scheme = parse_scheme(j.at("scheme").get<std::string>());
      ds.provenance.seed = j.value("seed", std::uint64_t{0});
      ds.provenance.tests = j.value("tests", std::vector<std::string>{});
      ds.provenance.corpus = j.value("corpus", std::string{});
      have_header = true;
      return;
    }
    Instance inst;
    inst.tokens = j.at("tokens").get<Tokens>();
    inst.label = j.at("label").get<int>();
    if (j.contains("test_id") && !j["test_id"].is_null()) {
      inst.test_id = j["test_id"].get<std::string>();
    }
    if (j.contains("marker_span") && !j["marker_span"].is_null()) {
      inst.marker_span = span_from_json(j["marker_span"]);
    }
    inst.source_id = j.value("source_id", std::string{});
    ds.instances.push_back(std::move(inst));
  });
  if (!have_header) throw DataError(name + ": empty dataset file (no header)");
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::string& path) {
  auto in = open_input(path);
  return read_dataset_jsonl(in, path);
}

std::vector<Sentence> read_corpus(std::istream& in, const std::string& name) {
  std::vector<Sentence> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    Tokens tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    if (contains_marker(tokens)) {
      throw DataError(name + ":" + std::to_string(line_no) +
                      ": literal marker token <S>/<E> in corpus");
    }
    corpus.push_back(Sentence{name + ":" + std::to_string(line_no), std::move(tokens)});
  }
  return corpus;
}

std::vector<Sentence> load_corpus(const std::string& path) {
  auto in = open_input(path);
  return read_corpus(in, fs::path(path).filename().string());
}

std::vector<std::string> list_treebank_files(const std::string& path) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) return {path};
  if (!fs::is_directory(path, ec)) throw DataError("no such treebank path: " + path);
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".mrg" || ext == ".tree" || ext == ".ptb") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no treebank files (.mrg/.tree/.ptb) under " + path);
  return files;
}

std::vector<ParseTree> load_treebank(const std::string& path) {
  std::vector<ParseTree> trees;
  for (const auto& file : list_treebank_files(path)) {
    try {
      auto part = parse_ptb(read_file(file), fs::path(file).stem().string());
      std::move(part.begin(), part.end(), std::back_inserter(trees));
    } catch (const ParseError& e) {
      throw ParseError(file + ": " + std::string(e.what()).substr(0, std::string(e.what()).rfind(" at byte")),
                       e.offset());
    }
  }
  return trees;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace constest
