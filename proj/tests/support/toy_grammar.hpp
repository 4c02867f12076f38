#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "constest/treebank.hpp"

namespace toy {

// Bracketed sentence from a small English-like CFG. VPs are realized as
// "did so" and PPs as "of it" often enough that both pro-forms occur
// naturally; NPs can be the pronoun "it".
std::string generate_bracketed(constest::Rng& rng);

// `count` trees, ids "<prefix>:<i>".
std::vector<constest::ParseTree> generate_trees(std::size_t count, std::uint64_t seed,
                                                const std::string& prefix = "toy");

// Random strictly binary tree over n tokens, bracketed; the tree has exactly
// n - 1 internal nodes.
std::string random_binary_bracketed(std::size_t n, constest::Rng& rng);

}  // namespace toy
