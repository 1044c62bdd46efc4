#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace arraymc {

/// Exact rational with normalized sign and gcd-reduced representation.
/// The engine only ever compares rationals (the element theories are
/// order-only), so no arithmetic beyond midpoint/shift is provided.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d = 1) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  // cross-multiplication in 128 bits; inputs stay within parser range
  int cmp(const Rational& o) const {
    __int128 l = static_cast<__int128>(num) * o.den;
    __int128 r = static_cast<__int128>(o.num) * den;
    return l < r ? -1 : (l > r ? 1 : 0);
  }
  bool operator==(const Rational& o) const { return cmp(o) == 0; }
  bool operator!=(const Rational& o) const { return cmp(o) != 0; }
  bool operator<(const Rational& o) const { return cmp(o) < 0; }
  bool operator<=(const Rational& o) const { return cmp(o) <= 0; }

  static Rational midpoint(const Rational& a, const Rational& b) {
    // (a+b)/2 without overflow for the magnitudes we handle
    __int128 n = static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den;
    __int128 d = static_cast<__int128>(a.den) * b.den * 2;
    return from128(n, d);
  }
  Rational plus_one() const { return Rational(num + den, den); }
  Rational minus_one() const { return Rational(num - den, den); }

  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }

 private:
  static Rational from128(__int128 n, __int128 d) {
    if (d < 0) { n = -n; d = -d; }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b) { __int128 t = a % b; a = b; b = t; }
    if (a > 1) { n /= a; d /= a; }
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
      throw std::overflow_error("rational overflow");
    return Rational(static_cast<long long>(n), static_cast<long long>(d));
  }
};

}  // namespace arraymc
