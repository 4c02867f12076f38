#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "constest/contrastive.hpp"
#include "constest/treebank.hpp"

namespace constest {

// EvalPair JSONL: {"sentence_id", "tokens", "constituent": [s,e], "distractor": [s,e]}
void write_pairs_jsonl(std::ostream& out, const std::vector<EvalPair>& pairs);
std::vector<EvalPair> read_pairs_jsonl(std::istream& in, const std::string& name = "pairs");
std::vector<EvalPair> load_pairs(const std::string& path);

// Dataset JSONL: header {"scheme","seed","tests","corpus"} then one Instance
// per line {"tokens","label","test_id","marker_span","source_id"}.
void write_dataset_jsonl(std::ostream& out, const Dataset& dataset);
Dataset read_dataset_jsonl(std::istream& in, const std::string& name = "dataset");
Dataset load_dataset(const std::string& path);

// One whitespace-tokenized sentence per line; blank lines are skipped and
// ids are "<name>:<line>". Literal marker tokens are rejected.
std::vector<Sentence> read_corpus(std::istream& in, const std::string& name);
std::vector<Sentence> load_corpus(const std::string& path);

// Treebank files under a directory (or a single file), sorted by path. Each
// file's trees get the file stem as id prefix.
std::vector<std::string> list_treebank_files(const std::string& path);
std::vector<ParseTree> load_treebank(const std::string& path);

std::string read_file(const std::string& path);

}  // namespace constest
