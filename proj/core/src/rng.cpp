#include "sgpo/rng.hpp"

#include <cstddef>

namespace sgpo {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

SplitRng::SplitRng(std::uint64_t seed) : key_(seed), gen_(splitmix(seed)) {}

SplitRng SplitRng::fork(std::string_view label, std::uint64_t index) const {
  std::uint64_t h = fnv1a(kFnvOffset, label.data(), label.size());
  h = fnv1a(h, &index, sizeof(index));
  return SplitRng(splitmix(key_ ^ h));
}

std::uint64_t SplitRng::bits() { return gen_(); }

double SplitRng::uniform() {
  return static_cast<double>(bits() >> 11) * 0x1.0p-53;
}

int SplitRng::categorical(std::span<const double> probs) {
  const double u = uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace sgpo
