#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "constest/proform.hpp"
#include "constest/types.hpp"

namespace constest {

enum class Scheme { focused, nonfocused, labeled };

std::string to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

struct Instance {
  Tokens tokens;
  int label = 1;  // 1 grammatical, 0 corrupted
  std::optional<std::string> test_id;
  std::optional<Span> marker_span;
  std::string source_id;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Provenance {
  std::string corpus;
  std::uint64_t seed = 0;
  std::vector<std::string> tests;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Dataset {
  Scheme scheme = Scheme::labeled;
  Provenance provenance;
  std::vector<Instance> instances;

  std::size_t count_label(int label) const;
  // Instances with the given label and test id.
  std::size_t count(int label, const std::string& test_id) const;

  // Throws DataError if any instance breaks the scheme's invariants.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class OccurrenceChoice { first, random };

struct BuildOptions {
  std::size_t span_len_min = 2;
  std::size_t span_len_max = 4;
  // Focused positives: which occurrence of a pro-form gets the markers.
  OccurrenceChoice occurrence = OccurrenceChoice::first;
  MatchPolicy match;
  // Non-focused only: sample this many positives without replacement
  // instead of using the whole corpus.
  std::optional<std::size_t> max_positives;
  // Resampling budget when a corruption span is itself an occurrence of the
  // pro-form being inserted.
  int corruption_retries = 10;
  std::string corpus_name = "corpus";
};

// All corpus sentences as positives plus one corrupted negative per positive.
// Negative sources come from a seed-shuffled order and tests are assigned
// round-robin, so per-test negative counts differ by at most one.
Dataset build_nonfocused(const std::vector<Sentence>& corpus, const TestSet& tests,
                         std::uint64_t seed, const BuildOptions& options = {});

// Per test t: every corpus sentence containing t (marked) as positives and as
// many marked corruptions, sampled without replacement, as negatives.
Dataset build_focused(const std::vector<Sentence>& corpus, const TestSet& tests,
                      std::uint64_t seed, const BuildOptions& options = {});

// CoLA layout: source \t label \t original-label \t sentence.
Dataset parse_labeled_tsv(std::istream& in, const std::string& name);
Dataset load_labeled_tsv(const std::string& path);

}  // namespace constest
