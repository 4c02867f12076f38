#include "constest/treebank.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

#include "constest/error.hpp"

namespace constest {

namespace {

// Bracketed-tree reader. Works on raw nodes first; label cleanup, trace
// removal and span assignment happen in a second pass.
struct RawNode {
  std::string label;
  std::string word;
  std::vector<RawNode> children;
  std::size_t offset = 0;
  bool is_preterminal = false;
};

class BracketReader {
 public:
  explicit BracketReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  RawNode read_node() {
    skip_space();
    const std::size_t open = pos_;
    if (pos_ >= text_.size() || text_[pos_] != '(') {
      throw ParseError("expected '('", pos_);
    }
    ++pos_;
    RawNode node;
    node.offset = open;

    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unbalanced parentheses", open);
    if (text_[pos_] != '(' && text_[pos_] != ')') node.label = read_atom();

    std::vector<std::string> atoms;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) {
        throw ParseError("unbalanced parentheses: unclosed '('", open);
      }
      const char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        if (!atoms.empty()) throw ParseError("token mixed with subtrees", pos_);
        node.children.push_back(read_node());
      } else {
        if (!node.children.empty()) {
          throw ParseError("token mixed with subtrees", pos_);
        }
        atoms.push_back(read_atom());
      }
    }

    if (atoms.size() > 1) throw ParseError("preterminal with several tokens", open);
    if (atoms.size() == 1) {
      if (node.label.empty()) throw ParseError("token without a label", open);
      node.word = std::move(atoms.front());
      node.is_preterminal = true;
    } else if (node.children.empty()) {
      throw ParseError("empty node", open);
    }
    return node;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string read_atom() {
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return std::string(text_.substr(begin, pos_ - begin));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string strip_function_tags(const std::string& label) {
  // Labels such as -NONE-, -LRB- start with a dash and are kept verbatim.
  if (label.empty() || label.front() == '-') return label;
  const auto cut = label.find_first_of("-=");
  return cut == std::string::npos ? label : label.substr(0, cut);
}

bool is_empty_element(const RawNode& node) {
  return node.label.rfind("-NONE-", 0) == 0;
}

// Builds the cleaned node; returns nullopt if nothing surface-visible is left.
std::optional<TreeNode> convert(const RawNode& raw, Tokens& tokens) {
  if (is_empty_element(raw)) return std::nullopt;
  TreeNode node;
  node.label = strip_function_tags(raw.label);
  const std::size_t start = tokens.size();
  if (raw.is_preterminal) {
    node.word = raw.word;
    tokens.push_back(raw.word);
  } else {
    for (const auto& child : raw.children) {
      if (auto converted = convert(child, tokens)) {
        node.children.push_back(std::move(*converted));
      }
    }
    if (node.children.empty()) return std::nullopt;
  }
  node.span = Span{start, tokens.size()};
  return node;
}

void collect_spans(const TreeNode& node, std::set<Span>& out) {
  out.insert(node.span);
  for (const auto& child : node.children) collect_spans(child, out);
}

}  // namespace

void ParseTree::validate() const {
  std::size_t next_leaf = 0;
  std::function<void(const TreeNode&)> check = [&](const TreeNode& node) {
    if (!node.span.valid_for(sentence.size())) {
      throw DataError("node " + node.label + " has invalid span " +
                      to_string(node.span));
    }
    if (node.is_leaf()) {
      if (node.span.length() != 1 || node.span.start != next_leaf ||
          sentence.tokens[next_leaf] != node.word) {
        throw DataError("leaf " + node.word + " does not match the sentence");
      }
      ++next_leaf;
      return;
    }
    std::size_t cursor = node.span.start;
    for (const auto& child : node.children) {
      if (child.span.start != cursor) {
        throw DataError("children of " + node.label + " are not contiguous");
      }
      cursor = child.span.end;
      check(child);
    }
    if (cursor != node.span.end) {
      throw DataError("children of " + node.label + " do not cover its span");
    }
  };
  if (sentence.tokens.empty()) throw DataError("tree has no tokens");
  check(root);
  if (next_leaf != sentence.size() || root.span != Span{0, sentence.size()}) {
    throw DataError("leaf count differs from the sentence length");
  }
}

std::vector<ParseTree> parse_ptb(std::string_view text,
                                 const std::string& id_prefix) {
  std::vector<ParseTree> trees;
  BracketReader reader(text);
  while (!reader.at_end()) {
    const RawNode raw = reader.read_node();
    ParseTree tree;
    auto root = convert(raw, tree.sentence.tokens);
    if (!root) throw ParseError("tree has no surface tokens", raw.offset);
    // "( (S ...) )": drop the unlabeled wrapper.
    while (root->label.empty() && root->children.size() == 1) {
      TreeNode inner = std::move(root->children.front());
      *root = std::move(inner);
    }
    tree.root = std::move(*root);
    tree.sentence.id = id_prefix + ":" + std::to_string(trees.size());
    trees.push_back(std::move(tree));
  }
  return trees;
}

std::set<Span> constituent_spans(const ParseTree& tree, bool exclude_trivial) {
  std::set<Span> spans;
  collect_spans(tree.root, spans);
  if (exclude_trivial) {
    const Span full{0, tree.sentence.size()};
    std::erase_if(spans, [&](const Span& s) { return s.length() == 1 || s == full; });
  }
  return spans;
}

std::vector<Span> enumerate_spans(std::size_t n, std::size_t min_len,
                                  std::size_t max_len) {
  if (min_len < 1 || min_len > max_len || max_len > n) {
    throw ContractViolation("enumerate_spans requires 1 <= min_len <= max_len <= n");
  }
  std::vector<Span> out;
  for (std::size_t start = 0; start + min_len <= n; ++start) {
    for (std::size_t len = min_len; len <= max_len && start + len <= n; ++len) {
      out.push_back(Span{start, start + len});
    }
  }
  return out;
}

std::optional<EvalPair> sample_eval_pair(const ParseTree& tree, Rng& rng) {
  const std::size_t n = tree.sentence.size();
  if (n < 3) throw ContractViolation("sample_eval_pair needs at least 3 tokens");

  const std::set<Span> nodes = constituent_spans(tree, false);
  const std::set<Span> candidates = constituent_spans(tree, true);
  std::vector<Span> pool(candidates.begin(), candidates.end());

  while (!pool.empty()) {
    const std::size_t pick = rng.uniform(pool.size());
    const Span constituent = pool[pick];
    std::vector<Span> distractors;
    for (const Span& s : enumerate_spans(n, constituent.length(), constituent.length())) {
      if (!nodes.contains(s)) distractors.push_back(s);
    }
    if (distractors.empty()) {
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      continue;
    }
    return EvalPair{tree.sentence, constituent,
                    distractors[rng.uniform(distractors.size())]};
  }
  return std::nullopt;
}

std::vector<EvalPair> build_eval_set(const std::vector<ParseTree>& trees,
                                     std::uint64_t seed,
                                     std::size_t min_tokens) {
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& tree = trees[i];
    if (tree.sentence.size() < std::max<std::size_t>(min_tokens, 3)) continue;
    Rng rng(derive_seed(seed, i));
    if (auto pair = sample_eval_pair(tree, rng)) pairs.push_back(std::move(*pair));
  }
  return pairs;
}

}  // namespace constest
