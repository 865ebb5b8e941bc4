#pragma once

// Exact rational arithmetic used for every certified density value.

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "density/errors.hpp"

namespace density {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw InvalidArgument("ratio: zero denominator");
  return Rational(BigInt(num), BigInt(den));
}

inline Rational ratio(const BigInt& num, const BigInt& den) {
  if (den == 0) throw InvalidArgument("ratio: zero denominator");
  return Rational(num, den);
}

/// 2^{-k} exactly.
inline Rational pow2_inv(unsigned k) {
  BigInt den = 1;
  den <<= k;
  return Rational(BigInt(1), den);
}

inline BigInt num_of(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt den_of(const Rational& r) { return boost::multiprecision::denominator(r); }

/// "p/q" in lowest terms, always with an explicit denominator.
inline std::string to_string(const Rational& r) {
  return num_of(r).str() + "/" + den_of(r).str();
}

/// Floor of a rational (toward -infinity).
inline BigInt floor_of(const Rational& r) {
  BigInt n = num_of(r), d = den_of(r);
  BigInt q = n / d;
  if (n < 0 && q * d != n) q -= 1;
  return q;
}

inline BigInt ceil_of(const Rational& r) {
  BigInt n = num_of(r), d = den_of(r);
  BigInt q = n / d;
  if (n > 0 && q * d != n) q += 1;
  return q;
}

/// Parses "p/q", "p", or a finite decimal "0.375" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] { return InvalidArgument("cannot parse rational '" + std::string(text) + "'"); };
  if (text.empty()) throw fail();
  auto parse_int = [&](std::string_view s) {
    if (s.empty()) throw fail();
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) throw fail();
    for (std::size_t j = i; j < s.size(); ++j)
      if (s[j] < '0' || s[j] > '9') throw fail();
    // cpp_int reads a leading 0 as octal, so strip leading zeros.
    std::size_t j = i;
    while (j + 1 < s.size() && s[j] == '0') ++j;
    BigInt v(std::string(s.substr(j)));
    return s[0] == '-' ? BigInt(-v) : v;
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigInt n = parse_int(text.substr(0, slash));
    BigInt d = parse_int(text.substr(slash + 1));
    if (d == 0) throw fail();
    return Rational(n, d);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string digits = std::string(text.substr(0, dot)) + std::string(text.substr(dot + 1));
    std::size_t frac = text.size() - dot - 1;
    if (digits.empty() || digits == "-" || digits == "+") throw fail();
    BigInt n = parse_int(digits);
    BigInt d = 1;
    for (std::size_t i = 0; i < frac; ++i) d *= 10;
    return Rational(n, d);
  }
  return Rational(parse_int(text));
}

/// Deterministic, locale-free shortest round-trip float rendering.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double to_double(std::uint64_t num, std::uint64_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

/// A rational whose numerator and denominator fit in 64 bits; used on hot paths.
struct SmallFrac {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static SmallFrac from(const Rational& r) {
    if (r < 0) throw InvalidArgument("negative rational where a density was expected: " + to_string(r));
    BigInt n = num_of(r), d = den_of(r);
    if (n > std::numeric_limits<std::uint64_t>::max() || d > std::numeric_limits<std::uint64_t>::max())
      throw CapExceeded("rational " + to_string(r) + " exceeds 64-bit parts");
    return {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(d)};
  }
};

using u128 = unsigned __int128;

/// ⌈q·n⌉ for a nonnegative q.
inline std::uint64_t ceil_mul(const SmallFrac& q, std::uint64_t n) {
  u128 p = static_cast<u128>(q.num) * n;
  return static_cast<std::uint64_t>((p + q.den - 1) / q.den);
}

inline std::uint64_t floor_mul(const SmallFrac& q, std::uint64_t n) {
  return static_cast<std::uint64_t>(static_cast<u128>(q.num) * n / q.den);
}

/// count/n >= q, exactly.
inline bool frac_ge(std::uint64_t count, std::uint64_t n, const SmallFrac& q) {
  return static_cast<u128>(count) * q.den >= static_cast<u128>(q.num) * n;
}

/// a/b compared with c/d: negative, zero, positive.
inline int frac_cmp(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  u128 l = static_cast<u128>(a) * d, r = static_cast<u128>(c) * b;
  return l < r ? -1 : (l > r ? 1 : 0);
}

/// Smallest r with r*r >= n.
inline std::uint64_t isqrt_ceil(std::uint64_t n) {
  if (n == 0) return 0;
  std::uint64_t r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (static_cast<u128>(r) * r < n) ++r;
  while (r > 0 && static_cast<u128>(r - 1) * (r - 1) >= n) --r;
  return r;
}

/// Largest r with r*r <= n.
inline std::uint64_t isqrt_floor(std::uint64_t n) {
  std::uint64_t r = isqrt_ceil(n);
  return static_cast<u128>(r) * r == n ? r : r - 1;
}

inline unsigned floor_log2(std::uint64_t n) {
  return n == 0 ? 0u : 63u - static_cast<unsigned>(__builtin_clzll(n));
}

}  // namespace density
