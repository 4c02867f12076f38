#include "toy_grammar.hpp"

#include <array>

namespace toy {

namespace {

using constest::Rng;

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[rng.uniform(N)];
}

constexpr std::array<const char*, 3> kDet = {"the", "a", "every"};
constexpr std::array<const char*, 10> kNoun = {"cat",  "dog",  "man",   "woman", "car",
                                               "house", "book", "river", "garden", "teacher"};
constexpr std::array<const char*, 6> kAdj = {"big", "small", "old", "red", "happy", "quiet"};
constexpr std::array<const char*, 6> kTrans = {"saw", "chased", "liked", "found", "built", "read"};
constexpr std::array<const char*, 4> kIntrans = {"slept", "left", "arrived", "laughed"};
constexpr std::array<const char*, 6> kPrep = {"in", "on", "with", "near", "behind", "under"};
constexpr std::array<const char*, 3> kName = {"John", "Mary", "Alice"};

std::string np(Rng& rng, int depth);

std::string pp(Rng& rng, int depth) {
  if (rng.uniform01() < 0.3) return "(PP (IN of) (NP (PRP it)))";
  return std::string("(PP (IN ") + pick(rng, kPrep) + ") " + np(rng, depth + 1) + ")";
}

std::string np(Rng& rng, int depth) {
  const double r = rng.uniform01();
  if (r < 0.15) return "(NP (PRP it))";
  if (r < 0.25) return std::string("(NP (NNP ") + pick(rng, kName) + "))";
  if (r < 0.35 && depth < 2) return "(NP " + np(rng, depth + 1) + " " + pp(rng, depth) + ")";
  std::string out = std::string("(NP (DT ") + pick(rng, kDet) + ") ";
  if (rng.uniform01() < 0.4) out += std::string("(JJ ") + pick(rng, kAdj) + ") ";
  return out + "(NN " + pick(rng, kNoun) + "))";
}

std::string vp(Rng& rng) {
  const double r = rng.uniform01();
  if (r < 0.2) return "(VP (VBD did) (RB so))";
  if (r < 0.45) return std::string("(VP (VBD ") + pick(rng, kTrans) + ") " + np(rng, 0) + ")";
  if (r < 0.65) {
    return std::string("(VP (VBD ") + pick(rng, kTrans) + ") " + np(rng, 1) + " " + pp(rng, 1) + ")";
  }
  if (r < 0.85) return std::string("(VP (VBD ") + pick(rng, kIntrans) + ") " + pp(rng, 0) + ")";
  return std::string("(VP (VBD ") + pick(rng, kIntrans) + "))";
}

std::string binary(std::size_t lo, std::size_t hi, Rng& rng) {
  if (hi - lo == 1) return "(W w" + std::to_string(lo) + ")";
  const std::size_t split = lo + 1 + rng.uniform(hi - lo - 1);
  return "(X " + binary(lo, split, rng) + " " + binary(split, hi, rng) + ")";
}

}  // namespace

std::string generate_bracketed(Rng& rng) {
  return "( (S " + np(rng, 0) + " " + vp(rng) + " (. .)) )";
}

std::vector<constest::ParseTree> generate_trees(std::size_t count, std::uint64_t seed,
                                                const std::string& prefix) {
  Rng rng(seed);
  std::string text;
  for (std::size_t i = 0; i < count; ++i) text += generate_bracketed(rng) + "\n";
  return constest::parse_ptb(text, prefix);
}

std::string random_binary_bracketed(std::size_t n, Rng& rng) {
  return binary(0, n, rng);
}

}  // namespace toy
