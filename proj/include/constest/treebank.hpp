#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "constest/rng.hpp"
#include "constest/types.hpp"

namespace constest {

// A tree node. Preterminals carry the surface token in `word` and have no
// children; every other node has at least one child.
struct TreeNode {
  std::string label;
  Span span;
  std::vector<TreeNode> children;
  std::string word;

  bool is_leaf() const noexcept { return children.empty(); }
};

struct ParseTree {
  Sentence sentence;
  TreeNode root;

  // Checks span contiguity and leaf/token agreement; throws DataError.
  void validate() const;
};

struct EvalPair {
  Sentence sentence;
  Span constituent;
  Span distractor;

  friend bool operator==(const EvalPair&, const EvalPair&) = default;
};

// Reads bracketed (.mrg-style) trees. Function tags are stripped from labels
// ("NP-SBJ-1" -> "NP"), -NONE- elements and ancestors left empty by their
// removal are dropped, and an unlabeled single-child wrapper is unwrapped.
// Sentence ids are "<id_prefix>:<index>".
std::vector<ParseTree> parse_ptb(std::string_view text,
                                 const std::string& id_prefix = "tree");

// Every node span of the tree (set semantics, so unary chains count once).
// With exclude_trivial, length-1 spans and the full-sentence span are removed.
std::set<Span> constituent_spans(const ParseTree& tree, bool exclude_trivial);

// All spans of n tokens with min_len <= length <= max_len, ordered by
// (start, length).
std::vector<Span> enumerate_spans(std::size_t n, std::size_t min_len,
                                  std::size_t max_len);

// Samples a non-trivial constituent and a same-length span that is not a node
// span of the tree. Constituents without any such distractor are removed from
// the pool and the draw is repeated; nullopt once the pool is exhausted.
std::optional<EvalPair> sample_eval_pair(const ParseTree& tree, Rng& rng);

// Applies sample_eval_pair to each tree with at least min_tokens tokens. Tree i
// draws from the sub-stream derive_seed(seed, i), so results do not depend on
// the rest of the corpus.
std::vector<EvalPair> build_eval_set(const std::vector<ParseTree>& trees,
                                     std::uint64_t seed,
                                     std::size_t min_tokens = 3);

}  // namespace constest
