#include "constest/proform.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "constest/error.hpp"

namespace constest {

namespace {

bool equal_ignoring_case(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

ProForm make(Category category, Tokens tokens) {
  return ProForm{join(tokens, "_"), std::move(tokens), category};
}

}  // namespace

std::string to_string(Category category) {
  switch (category) {
    case Category::pronoun: return "pronoun";
    case Category::pro_pp: return "pro_pp";
    case Category::pro_vp: return "pro_vp";
    case Category::pro_sentence: return "pro_sentence";
    case Category::pro_adverb: return "pro_adverb";
  }
  return "unknown";
}

Category parse_category(std::string_view name) {
  for (Category c : {Category::pronoun, Category::pro_pp, Category::pro_vp,
                     Category::pro_sentence, Category::pro_adverb}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("unknown pro-form category '" + std::string(name) + "'");
}

TestSet::TestSet(std::vector<ProForm> items) : items_(std::move(items)) {
  if (items_.empty()) throw ConfigError("test set is empty");
  std::set<std::string> seen;
  for (const auto& t : items_) {
    if (t.id.empty()) throw ConfigError("pro-form with empty id");
    if (t.tokens.empty()) throw ConfigError("pro-form '" + t.id + "' has no tokens");
    for (const auto& tok : t.tokens) {
      if (tok.empty() || is_marker(tok) ||
          std::any_of(tok.begin(), tok.end(),
                      [](unsigned char c) { return std::isspace(c); })) {
        throw ConfigError("pro-form '" + t.id + "' has an invalid token");
      }
    }
    if (!seen.insert(t.id).second) throw ConfigError("duplicate pro-form id '" + t.id + "'");
  }
}

const ProForm* TestSet::find(std::string_view id) const noexcept {
  auto it = std::find_if(items_.begin(), items_.end(),
                         [&](const ProForm& t) { return t.id == id; });
  return it == items_.end() ? nullptr : &*it;
}

std::vector<std::string> TestSet::ids() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& t : items_) out.push_back(t.id);
  return out;
}

TestSet TestSet::subset(const std::vector<std::string>& ids) const {
  std::vector<ProForm> picked;
  for (const auto& id : ids) {
    const ProForm* t = find(id);
    if (!t) throw ConfigError("unknown pro-form id '" + id + "'");
    picked.push_back(*t);
  }
  return TestSet(std::move(picked));
}

TestSet default_inventory() {
  using C = Category;
  return TestSet({
      make(C::pronoun, {"it"}),
      make(C::pronoun, {"ones"}),
      make(C::pronoun, {"this"}),
      make(C::pronoun, {"that"}),
      make(C::pronoun, {"they"}),
      make(C::pronoun, {"I"}),
      make(C::pronoun, {"we"}),
      make(C::pronoun, {"you"}),
      make(C::pro_pp, {"of", "it"}),
      make(C::pro_pp, {"for", "it"}),
      make(C::pro_pp, {"in", "it"}),
      make(C::pro_vp, {"did", "so"}),
      make(C::pro_vp, {"do", "that"}),
      make(C::pro_vp, {"does", "that"}),
      make(C::pro_sentence, {"it", "is"}),
      make(C::pro_sentence, {"that", "it", "is"}),
      make(C::pro_adverb, {"there"}),
      make(C::pro_adverb, {"this", "way"}),
  });
}

TestSet parse_inventory_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("inventory is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("inventory must be a JSON array");
  std::vector<ProForm> items;
  for (const auto& entry : doc) {
    try {
      ProForm t;
      t.id = entry.at("id").get<std::string>();
      t.tokens = entry.at("tokens").get<Tokens>();
      t.category = parse_category(entry.at("category").get<std::string>());
      items.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad inventory entry: ") + e.what());
    }
  }
  return TestSet(std::move(items));
}

TestSet load_inventory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open inventory file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_inventory_json(buf.str());
}

Sentence apply_test(const Sentence& s, const Span& x, const ProForm& t) {
  if (!x.valid_for(s.size())) {
    throw ContractViolation("span " + to_string(x) + " invalid for sentence of " +
                            std::to_string(s.size()) + " tokens");
  }
  Sentence out;
  out.id = s.id + "|" + t.id + "@" + std::to_string(x.start) + ":" +
           std::to_string(x.end);
  out.tokens.reserve(s.size() - x.length() + t.tokens.size());
  const auto first = s.tokens.begin();
  out.tokens.insert(out.tokens.end(), first, first + static_cast<std::ptrdiff_t>(x.start));
  out.tokens.insert(out.tokens.end(), t.tokens.begin(), t.tokens.end());
  out.tokens.insert(out.tokens.end(), first + static_cast<std::ptrdiff_t>(x.end),
                    s.tokens.end());
  return out;
}

Span inserted_span(const Span& x, const ProForm& t) {
  return Span{x.start, x.start + t.tokens.size()};
}

MarkedSentence markup(const Sentence& transformed, const Span& inserted) {
  if (!inserted.valid_for(transformed.size())) {
    throw ContractViolation("markup span " + to_string(inserted) + " is invalid");
  }
  MarkedSentence out;
  out.marker_span = inserted;
  out.tokens.reserve(transformed.size() + 2);
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    if (i == inserted.start) out.tokens.emplace_back(kStartMarker);
    out.tokens.push_back(transformed.tokens[i]);
    if (i + 1 == inserted.end) out.tokens.emplace_back(kEndMarker);
  }
  return out;
}

bool is_marker(std::string_view token) noexcept {
  return token == kStartMarker || token == kEndMarker;
}

bool contains_marker(const Tokens& tokens) noexcept {
  return std::any_of(tokens.begin(), tokens.end(),
                     [](const std::string& t) { return is_marker(t); });
}

Tokens strip_markers(const Tokens& tokens) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!is_marker(t)) out.push_back(t);
  }
  return out;
}

std::vector<Span> find_occurrences(const Sentence& s, const ProForm& t,
                                   const MatchPolicy& policy) {
  std::vector<Span> out;
  const std::size_t m = t.tokens.size();
  if (m == 0 || m > s.size()) return out;
  for (std::size_t start = 0; start + m <= s.size(); ++start) {
    bool match = true;
    for (std::size_t k = 0; k < m && match; ++k) {
      const std::string& have = s.tokens[start + k];
      const std::string& want = t.tokens[k];
      const bool fold = policy.fold_initial_case && start + k == 0 && want != "I";
      match = fold ? equal_ignoring_case(have, want) : have == want;
    }
    if (match) out.push_back(Span{start, start + m});
  }
  return out;
}

}  // namespace constest
