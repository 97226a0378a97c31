#pragma once

#include <compare>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace mtree {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline std::strong_ordering compare(const Rational& a, const Rational& b) {
  if (a < b) return std::strong_ordering::less;
  if (b < a) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

inline bool is_integer(const Rational& value) {
  return boost::multiprecision::denominator(value) == 1;
}

/// Parses an unsigned decimal literal ("13", "3.25"). Throws
/// std::invalid_argument on anything else.
Rational parse_decimal(std::string_view text);

/// Inverse of format_rational: accepts "-3.5", "7", "(1/3)", "-1/3".
Rational parse_rational(std::string_view text);

/// Integers print bare, terminating fractions as decimals ("0.25"),
/// everything else as a parenthesized fraction ("(1/3)", "(-2/3)").
std::string format_rational(const Rational& value);

double to_double(const Rational& value);

}  // namespace mtree
