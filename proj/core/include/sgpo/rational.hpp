#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace sgpo {

// Exact small rational. Keeps reward bookkeeping free of rounding until the
// shaping step converts to double. Invariant: den > 0, gcd(|num|, den) == 1.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;

  constexpr Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  constexpr double value() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;

  // Magnitudes here stay tiny (numerators/denominators bounded by horizons),
  // so cross multiplication cannot overflow.
  constexpr std::strong_ordering operator<=>(const Rational& o) const {
    return num * o.den <=> o.num * den;
  }
};

}  // namespace sgpo
