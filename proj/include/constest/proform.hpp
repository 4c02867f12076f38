#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "constest/types.hpp"

namespace constest {

inline constexpr std::string_view kStartMarker = "<S>";
inline constexpr std::string_view kEndMarker = "<E>";

enum class Category { pronoun, pro_pp, pro_vp, pro_sentence, pro_adverb };

std::string to_string(Category category);
Category parse_category(std::string_view name);

struct ProForm {
  std::string id;
  Tokens tokens;
  Category category = Category::pronoun;

  friend bool operator==(const ProForm&, const ProForm&) = default;
};

// An ordered, non-empty set of pro-form tests with distinct ids.
class TestSet {
 public:
  explicit TestSet(std::vector<ProForm> items);

  std::size_t size() const noexcept { return items_.size(); }
  const ProForm& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }

  const ProForm* find(std::string_view id) const noexcept;
  std::vector<std::string> ids() const;

  // Tests with the given ids, in the order given. Unknown ids throw ConfigError.
  TestSet subset(const std::vector<std::string>& ids) const;

  friend bool operator==(const TestSet&, const TestSet&) = default;

 private:
  std::vector<ProForm> items_;
};

// The 18 pro-forms: pronouns, pro-PPs, pro-VPs, pro-sentences, pro-adverbs.
TestSet default_inventory();

// JSON inventory: [{"id": str, "tokens": [str], "category": str}, ...]
TestSet parse_inventory_json(std::string_view json_text);
TestSet load_inventory(const std::string& path);

// Replaces span x of s by t's tokens. Throws ContractViolation on a bad span.
Sentence apply_test(const Sentence& s, const Span& x, const ProForm& t);

// Where t's tokens sit inside apply_test(s, x, t).
Span inserted_span(const Span& x, const ProForm& t);

struct MarkedSentence {
  Tokens tokens;
  // Span of the pro-form in the marker-free token sequence.
  Span marker_span;

  friend bool operator==(const MarkedSentence&, const MarkedSentence&) = default;
};

MarkedSentence markup(const Sentence& transformed, const Span& inserted);

// Removes every "<S>"/"<E>" token.
Tokens strip_markers(const Tokens& tokens);
bool is_marker(std::string_view token) noexcept;
bool contains_marker(const Tokens& tokens) noexcept;

struct MatchPolicy {
  // Compare the sentence-initial token case-insensitively (except "I").
  bool fold_initial_case = true;
};

// Every start position where t's tokens occur contiguously in s, ascending.
// Occurrences may overlap each other.
std::vector<Span> find_occurrences(const Sentence& s, const ProForm& t,
                                   const MatchPolicy& policy = {});

}  // namespace constest
