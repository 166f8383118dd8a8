#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "stablefare/errors.hpp"

namespace stablefare {

// Exact rational scalar used for all money/time quantities. Inputs are decimal
// strings, so every instance quantity is representable exactly; solver results
// in exact mode are therefore reproducible bit for bit.
using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline BigInt rat_num(const Rat& r) { return boost::multiprecision::numerator(r); }
inline BigInt rat_den(const Rat& r) { return boost::multiprecision::denominator(r); }

// Parses "12", "-3.25", "4.5e-2", or "9/2" into an exact rational.
inline Rat parse_decimal(std::string_view text) {
  auto fail = [&]() -> Rat {
    throw ParseError("not a decimal or rational literal: '" + std::string(text) + "'");
  };
  if (text.empty()) return fail();

  // Fraction form p/q.
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    try {
      BigInt p(std::string(text.substr(0, slash)));
      BigInt q(std::string(text.substr(slash + 1)));
      if (q == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
      return Rat(p, q);
    } catch (const std::runtime_error&) {
      return fail();
    }
  }

  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') {
    negative = text[i] == '-';
    ++i;
  }
  BigInt mantissa = 0;
  std::int64_t frac_digits = 0;
  bool any_digit = false, in_frac = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      if (in_frac) ++frac_digits;
      any_digit = true;
    } else if (c == '.') {
      if (in_frac) return fail();
      in_frac = true;
    } else if (c == 'e' || c == 'E') {
      break;
    } else {
      return fail();
    }
  }
  if (!any_digit) return fail();

  std::int64_t exponent = 0;
  if (i < text.size()) {  // at 'e'/'E'
    ++i;
    bool exp_neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      exp_neg = text[i] == '-';
      ++i;
    }
    if (i == text.size()) return fail();
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') return fail();
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > 1000) throw ParseError("exponent out of range in '" + std::string(text) + "'");
    }
    if (exp_neg) exponent = -exponent;
  }

  std::int64_t shift = exponent - frac_digits;
  Rat value(mantissa);
  if (shift > 0) {
    value *= Rat(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(shift)));
  } else if (shift < 0) {
    value /= Rat(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(-shift)));
  }
  if (negative) value = -value;
  return value;
}

// Fixed-point rendering with `places` fraction digits, deterministic
// round-half-away-from-zero. Used by all report emitters.
inline std::string format_fixed(const Rat& value, int places) {
  BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(places));
  Rat scaled = value * scale;
  BigInt num = rat_num(scaled), den = rat_den(scaled);
  bool negative = num < 0;
  if (negative) num = -num;
  // round(x) = floor(x + 1/2) on the magnitude
  BigInt rounded = (2 * num + den) / (2 * den);
  std::string digits = rounded.str();
  if (static_cast<int>(digits.size()) <= places)
    digits.insert(0, places + 1 - digits.size(), '0');
  std::string out;
  if (negative && rounded != 0) out += '-';
  out += digits.substr(0, digits.size() - places);
  if (places > 0) {
    out += '.';
    out += digits.substr(digits.size() - places);
  }
  return out;
}

// Lossless rendering: terminating decimal when the denominator is 2^a*5^b,
// otherwise "p/q". parse_decimal() accepts both.
inline std::string format_exact(const Rat& value) {
  BigInt den = rat_den(value);
  int twos = 0, fives = 0;
  BigInt d = den;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) return rat_num(value).str() + "/" + den.str();
  int places = twos > fives ? twos : fives;
  if (places == 0) return rat_num(value).str();
  return format_fixed(value, places);
}

inline double to_double(const Rat& value) { return value.convert_to<double>(); }

// Numeric traits for the two arithmetic modes. The solver stack is templated
// on the scalar; `Rat` gives exact results, `double` trades exactness for
// speed under an absolute tolerance.
template <class T>
struct num_traits;

template <>
struct num_traits<Rat> {
  static constexpr bool exact = true;
  static Rat from_rat(const Rat& r) { return r; }
  static Rat from_int(long v) { return Rat(v); }
  static double as_double(const Rat& v) { return to_double(v); }
  // Comparisons are exact; tolerances are all zero.
  static Rat feasibility_tol() { return Rat(0); }
  static Rat integrality_tol() { return Rat(0); }
  static bool is_integer(const Rat& v) { return rat_den(v) == 1; }
  static Rat floor(const Rat& v) {
    BigInt q = rat_num(v) / rat_den(v);
    if (v < 0 && q * rat_den(v) != rat_num(v)) --q;
    return Rat(q);
  }
  static Rat ceil(const Rat& v) { return -floor(-v); }
  static long round_to_long(const Rat& v) {
    return static_cast<long>(floor(v + Rat(1, 2)).convert_to<long long>());
  }
};

template <>
struct num_traits<double> {
  static constexpr bool exact = false;
  static double from_rat(const Rat& r) { return to_double(r); }
  static double from_int(long v) { return static_cast<double>(v); }
  static double as_double(double v) { return v; }
  // Process-wide float tolerances; the CLI's --tol flag adjusts them.
  static inline double feasibility_tolerance = 1e-7;
  static inline double integrality_tolerance = 1e-6;
  static double feasibility_tol() { return feasibility_tolerance; }
  static double integrality_tol() { return integrality_tolerance; }
  static bool is_integer(double v) { return std::abs(v - std::round(v)) <= integrality_tol(); }
  static double floor(double v) { return std::floor(v); }
  static double ceil(double v) { return std::ceil(v); }
  static long round_to_long(double v) { return static_cast<long>(std::llround(v)); }
};

// Fixed 6-decimal rendering used across reports, both modes.
inline std::string format_money(const Rat& v) { return format_fixed(v, 6); }
inline std::string format_money(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // Normalize "-0.000000" so equal values render identically.
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

}  // namespace stablefare
