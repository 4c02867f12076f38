#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

namespace constest {

using Tokens = std::vector<std::string>;

// Half-open token interval [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  constexpr std::size_t length() const noexcept { return end - start; }
  constexpr bool valid_for(std::size_t n) const noexcept {
    return start < end && end <= n;
  }

  friend constexpr auto operator<=>(const Span&, const Span&) = default;
};

struct Sentence {
  std::string id;
  Tokens tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

std::string to_string(const Span& span);
std::string join(const Tokens& tokens, const std::string& sep = " ");
Tokens split_whitespace(const std::string& text);

}  // namespace constest
