#include "constest/types.hpp"

#include <cctype>

namespace constest {

std::string to_string(const Span& span) {
  return "[" + std::to_string(span.start) + "," + std::to_string(span.end) + ")";
}

std::string join(const Tokens& tokens, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

Tokens split_whitespace(const std::string& text) {
  Tokens out;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

}  // namespace constest
