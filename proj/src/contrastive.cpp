#include "constest/contrastive.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "constest/error.hpp"
#include "constest/rng.hpp"
#include "constest/treebank.hpp"

namespace constest {

namespace {

void check_corpus(const std::vector<Sentence>& corpus, const TestSet& tests,
                  const BuildOptions& options) {
  if (corpus.empty()) throw ConfigError("corpus is empty");
  if (tests.size() == 0) throw ConfigError("test set is empty");
  if (options.span_len_min < 1 || options.span_len_min > options.span_len_max) {
    throw ConfigError("invalid corruption span length bounds");
  }
  for (const auto& s : corpus) {
    if (contains_marker(s.tokens)) {
      throw DataError("corpus sentence " + s.id + " contains a literal marker token");
    }
  }
}

std::vector<std::size_t> eligible_sources(const std::vector<Sentence>& corpus,
                                          const std::vector<std::size_t>& members,
                                          const BuildOptions& options) {
  std::vector<std::size_t> out;
  for (std::size_t i : members) {
    if (corpus[i].size() >= options.span_len_min + 1) out.push_back(i);
  }
  return out;
}

bool slice_equals(const Tokens& tokens, const Span& span, const Tokens& want) {
  return span.length() == want.size() &&
         std::equal(want.begin(), want.end(),
                    tokens.begin() + static_cast<std::ptrdiff_t>(span.start));
}

struct Corruption {
  Sentence sentence;
  Span inserted;
};

// Replaces a random span of span_len_min..span_len_max tokens (never the whole
// sentence) by t. Spans that already read as t are redrawn a bounded number
// of times.
Corruption corrupt(const Sentence& source, const ProForm& t, Rng& rng,
                   const BuildOptions& options) {
  const std::size_t max_len = std::min(options.span_len_max, source.size() - 1);
  const auto spans = enumerate_spans(source.size(), options.span_len_min, max_len);
  Span span = spans[rng.uniform(spans.size())];
  for (int retry = 0; retry < options.corruption_retries &&
                      slice_equals(source.tokens, span, t.tokens);
       ++retry) {
    span = spans[rng.uniform(spans.size())];
  }
  return Corruption{apply_test(source, span, t), inserted_span(span, t)};
}

// Draws `count` indices from `pool` without replacement; once the pool is
// used up a fresh permutation is started.
std::vector<std::size_t> draw_sources(std::vector<std::size_t> pool,
                                      std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    rng.shuffle(pool);
    const std::size_t take = std::min(pool.size(), count - out.size());
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

Provenance provenance_for(const TestSet& tests, std::uint64_t seed,
                          const BuildOptions& options) {
  return Provenance{options.corpus_name, seed, tests.ids()};
}

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::focused: return "focused";
    case Scheme::nonfocused: return "nonfocused";
    case Scheme::labeled: return "labeled";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "focused") return Scheme::focused;
  if (name == "nonfocused" || name == "non-focused") return Scheme::nonfocused;
  if (name == "labeled") return Scheme::labeled;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count_if(
      instances.begin(), instances.end(),
      [&](const Instance& i) { return i.label == label; }));
}

std::size_t Dataset::count(int label, const std::string& test_id) const {
  return static_cast<std::size_t>(
      std::count_if(instances.begin(), instances.end(), [&](const Instance& i) {
        return i.label == label && i.test_id == test_id;
      }));
}

void Dataset::validate() const {
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const Instance& inst = instances[k];
    const auto fail = [&](const std::string& why) {
      throw DataError("instance " + std::to_string(k) + " (" + inst.source_id +
                      "): " + why);
    };
    if (inst.label != 0 && inst.label != 1) fail("label must be 0 or 1");
    if (inst.tokens.empty()) fail("no tokens");
    const bool marked = contains_marker(inst.tokens);
    if (scheme == Scheme::focused) {
      if (!inst.test_id || !inst.marker_span) fail("focused instance without test id or marker span");
      const auto starts = std::count(inst.tokens.begin(), inst.tokens.end(), kStartMarker);
      const auto ends = std::count(inst.tokens.begin(), inst.tokens.end(), kEndMarker);
      const auto open = std::find(inst.tokens.begin(), inst.tokens.end(), kStartMarker);
      const auto close = std::find(inst.tokens.begin(), inst.tokens.end(), kEndMarker);
      if (starts != 1 || ends != 1 || open > close) fail("malformed markers");
      const Span expect{static_cast<std::size_t>(open - inst.tokens.begin()),
                        static_cast<std::size_t>(close - inst.tokens.begin()) - 1};
      if (*inst.marker_span != expect) fail("marker_span disagrees with marker positions");
    } else {
      if (marked || inst.marker_span) fail("unexpected markers");
      if (scheme == Scheme::nonfocused && inst.label == 0 && !inst.test_id) {
        fail("corrupted instance without test id");
      }
    }
  }
}

Dataset build_nonfocused(const std::vector<Sentence>& corpus, const TestSet& tests,
                         std::uint64_t seed, const BuildOptions& options) {
  check_corpus(corpus, tests, options);
  Rng rng(seed);

  std::vector<std::size_t> positives(corpus.size());
  std::iota(positives.begin(), positives.end(), std::size_t{0});
  if (options.max_positives && *options.max_positives < corpus.size()) {
    rng.shuffle(positives);
    positives.resize(*options.max_positives);
    std::sort(positives.begin(), positives.end());
  }
  if (positives.empty()) throw ConfigError("no positive instances selected");

  const auto eligible = eligible_sources(corpus, positives, options);
  if (eligible.empty()) {
    throw ConfigError("no sentence is long enough to corrupt (need " +
                      std::to_string(options.span_len_min + 1) + " tokens)");
  }

  Dataset ds;
  ds.scheme = Scheme::nonfocused;
  ds.provenance = provenance_for(tests, seed, options);
  ds.instances.reserve(2 * positives.size());
  for (std::size_t i : positives) {
    ds.instances.push_back(Instance{corpus[i].tokens, 1, std::nullopt, std::nullopt, corpus[i].id});
  }

  const auto sources = draw_sources(eligible, positives.size(), rng);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const ProForm& t = tests[k % tests.size()];
    const Sentence& source = corpus[sources[k]];
    auto c = corrupt(source, t, rng, options);
    ds.instances.push_back(
        Instance{std::move(c.sentence.tokens), 0, t.id, std::nullopt, source.id});
  }
  return ds;
}

Dataset build_focused(const std::vector<Sentence>& corpus, const TestSet& tests,
                      std::uint64_t seed, const BuildOptions& options) {
  check_corpus(corpus, tests, options);

  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto eligible = eligible_sources(corpus, all, options);

  Dataset ds;
  ds.scheme = Scheme::focused;
  ds.provenance = provenance_for(tests, seed, options);

  for (std::size_t ti = 0; ti < tests.size(); ++ti) {
    const ProForm& t = tests[ti];
    Rng rng(derive_seed(seed, ti));

    std::size_t n_pos = 0;
    for (const auto& s : corpus) {
      const auto occ = find_occurrences(s, t, options.match);
      if (occ.empty()) continue;
      const Span chosen = options.occurrence == OccurrenceChoice::first
                              ? occ.front()
                              : occ[rng.uniform(occ.size())];
      auto marked = markup(s, chosen);
      ds.instances.push_back(
          Instance{std::move(marked.tokens), 1, t.id, marked.marker_span, s.id});
      ++n_pos;
    }
    if (n_pos == 0) continue;
    if (eligible.empty()) {
      throw ConfigError("no sentence is long enough to corrupt (need " +
                        std::to_string(options.span_len_min + 1) + " tokens)");
    }

    for (std::size_t idx : draw_sources(eligible, n_pos, rng)) {
      const Sentence& source = corpus[idx];
      auto c = corrupt(source, t, rng, options);
      auto marked = markup(c.sentence, c.inserted);
      ds.instances.push_back(
          Instance{std::move(marked.tokens), 0, t.id, marked.marker_span, source.id});
    }
  }
  return ds;
}

Dataset parse_labeled_tsv(std::istream& in, const std::string& name) {
  Dataset ds;
  ds.scheme = Scheme::labeled;
  ds.provenance.corpus = name;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fail = [&](const std::string& why) {
      throw DataError(name + ":" + std::to_string(line_no) + ": " + why);
    };

    std::vector<std::string> cols;
    std::size_t begin = 0;
    for (;;) {
      const auto tab = line.find('\t', begin);
      cols.push_back(line.substr(begin, tab == std::string::npos ? tab : tab - begin));
      if (tab == std::string::npos) break;
      begin = tab + 1;
    }
    if (cols.size() < 4) fail("expected 4 tab-separated columns, got " + std::to_string(cols.size()));
    if (cols[1] != "0" && cols[1] != "1") fail("label must be 0 or 1, got '" + cols[1] + "'");

    Instance inst;
    inst.label = cols[1] == "1" ? 1 : 0;
    // Sentences may themselves contain tabs in some dumps; keep the remainder.
    std::string sentence = cols[3];
    for (std::size_t c = 4; c < cols.size(); ++c) sentence += " " + cols[c];
    inst.tokens = split_whitespace(sentence);
    if (inst.tokens.empty()) fail("empty sentence");
    if (contains_marker(inst.tokens)) fail("sentence contains a literal marker token");
    inst.source_id = name + ":" + std::to_string(line_no);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

Dataset load_labeled_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_labeled_tsv(in, path);
}

}  // namespace constest
