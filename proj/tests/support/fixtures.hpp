#pragma once

#include "constest/contrastive.hpp"
#include "constest/rng.hpp"

namespace fixtures {

// Positives carry "GOOD", negatives "BAD"; the rest is shared filler.
inline constest::Dataset separable_set(std::size_t n, std::uint64_t seed) {
  using namespace constest;
  const Tokens filler{"the", "a", "cat", "dog", "ran", "sat", "on", "mat", "."};
  Rng rng(seed);
  Dataset ds;
  ds.scheme = Scheme::labeled;
  for (std::size_t i = 0; i < n; ++i) {
    Instance inst;
    inst.label = static_cast<int>(i % 2);
    const std::size_t len = 3 + rng.uniform(6);
    for (std::size_t k = 0; k < len; ++k) inst.tokens.push_back(filler[rng.uniform(filler.size())]);
    inst.tokens.insert(inst.tokens.begin() + static_cast<long>(rng.uniform(len + 1)),
                       inst.label ? "GOOD" : "BAD");
    inst.source_id = "s" + std::to_string(i);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

}  // namespace fixtures
