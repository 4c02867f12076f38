#pragma once

#include <functional>
#include <span>
#include <vector>

#include "constest/types.hpp"

namespace constest {

// Grammaticality function: higher means more acceptable, values in [0, 1].
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual double score(const Tokens& tokens) = 0;

  // Scores in input order. Implementations may override to batch.
  virtual std::vector<double> score_batch(std::span<const Tokens> inputs) {
    std::vector<double> out;
    out.reserve(inputs.size());
    for (const auto& tokens : inputs) out.push_back(score(tokens));
    return out;
  }
};

// Adapts any callable to the Scorer interface.
class FunctionScorer final : public Scorer {
 public:
  explicit FunctionScorer(std::function<double(const Tokens&)> fn) : fn_(std::move(fn)) {}
  double score(const Tokens& tokens) override { return fn_(tokens); }

 private:
  std::function<double(const Tokens&)> fn_;
};

}  // namespace constest
