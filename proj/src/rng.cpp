#include "constest/rng.hpp"

#include <limits>

#include "constest/error.hpp"

namespace constest {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

std::size_t Rng::uniform(std::size_t n) {
  if (n == 0) throw ContractViolation("Rng::uniform called with n = 0");
  const std::uint64_t bound = n;
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = next();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % bound);
}

}  // namespace constest
