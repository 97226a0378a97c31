#include "mtree/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace mtree {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

Integer pow10(std::size_t k) {
  Integer p = 1;
  for (std::size_t i = 0; i < k; ++i) p *= 10;
  return p;
}

// Digit by digit: cpp_int's string constructor reads a leading 0 as octal.
Integer digits_value(std::string_view digits) {
  Integer v = 0;
  for (char c : digits) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

Rational parse_decimal(std::string_view text) {
  const auto dot = text.find('.');
  const auto whole = text.substr(0, dot);
  if (!all_digits(whole)) {
    throw std::invalid_argument("not a decimal literal: " + std::string(text));
  }
  Integer numerator = digits_value(whole);
  if (dot == std::string_view::npos) return Rational(numerator);

  const auto frac = text.substr(dot + 1);
  if (!all_digits(frac)) {
    throw std::invalid_argument("not a decimal literal: " + std::string(text));
  }
  const Integer scale = pow10(frac.size());
  numerator = numerator * scale + digits_value(frac);
  return Rational(numerator, scale);
}

Rational parse_rational(std::string_view text) {
  if (text.size() >= 2 && text.front() == '(' && text.back() == ')') {
    text = text.substr(1, text.size() - 2);
  }
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  Rational value;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const Rational num = parse_decimal(text.substr(0, slash));
    const Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    value = num / den;
  } else {
    value = parse_decimal(text);
  }
  return negative ? Rational(-value) : value;
}

std::string format_rational(const Rational& value) {
  const Integer num = boost::multiprecision::numerator(value);
  const Integer den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();

  // den = 2^a 5^b  <=>  the decimal expansion terminates.
  Integer rest = den;
  std::size_t twos = 0, fives = 0;
  while (rest % 2 == 0) { rest /= 2; ++twos; }
  while (rest % 5 == 0) { rest /= 5; ++fives; }
  if (rest != 1) return "(" + num.str() + "/" + den.str() + ")";

  const std::size_t digits = std::max(twos, fives);
  const Integer scaled = abs(num) * (pow10(digits) / den);
  std::string body = scaled.str();
  if (body.size() <= digits) body.insert(0, digits + 1 - body.size(), '0');
  body.insert(body.size() - digits, ".");
  return (num < 0 ? "-" : "") + body;
}

double to_double(const Rational& value) {
  return value.convert_to<double>();
}

}  // namespace mtree
