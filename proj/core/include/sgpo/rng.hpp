#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace sgpo {

// Deterministic tree-structured RNG.
//
// Child streams are derived from the parent *key*, never from the evolving
// generator state, so forking consumes no randomness and a stream's draws do
// not depend on how many siblings were forked before it. All draws go through
// mt19937_64 plus a fixed 53-bit uniform construction, so sequences are
// identical across platforms and standard libraries.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed);

  // Independent child stream for (label, index). Pure function of this
  // stream's key.
  SplitRng fork(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t bits();                 // next 64 random bits
  double uniform();                     // [0, 1), 53-bit resolution
  // Index draw by inverse CDF; probs must be nonnegative. A trailing
  // shortfall from rounding resolves to the last index.
  int categorical(std::span<const double> probs);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 gen_;
};

}  // namespace sgpo
