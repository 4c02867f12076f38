#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace constest {

// SplitMix64 finalizer; used to derive independent sub-stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for the sub-stream `stream` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Deterministic random source. std::mt19937_64 output is fixed by the
// standard; the distributions below are hand-rolled because the standard
// library ones are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform(std::size_t n);

  // Uniform real in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace constest
