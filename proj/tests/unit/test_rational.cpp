#include <doctest.h>

#include "mtree/rational.hpp"

using namespace mtree;

TEST_CASE("decimal literals are exact") {
  CHECK(parse_decimal("13") == 13);
  CHECK(parse_decimal("3.25") == Rational(13, 4));
  CHECK(parse_decimal("0.1") * 3 == Rational(3, 10));
  // Leading zeros are decimal, not octal.
  CHECK(parse_decimal("0.0625") == Rational(1, 16));
  CHECK(parse_decimal("010") == 10);
  CHECK(parse_decimal("08.5") == Rational(17, 2));
  CHECK_THROWS_AS(parse_decimal("-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_decimal("1.2.3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_decimal(""), std::invalid_argument);
}

TEST_CASE("format_rational picks the shortest exact spelling") {
  CHECK(format_rational(7) == "7");
  CHECK(format_rational(Rational(-7, 2)) == "-3.5");
  CHECK(format_rational(Rational(1, 4)) == "0.25");
  CHECK(format_rational(Rational(1, 3)) == "(1/3)");
  CHECK(format_rational(Rational(-2, 3)) == "(-2/3)");
}

TEST_CASE("parse_rational inverts format_rational") {
  for (const Rational& v : {Rational(0), Rational(5), Rational(-3, 8), Rational(22, 7), Rational(-1, 3)}) {
    CHECK(parse_rational(format_rational(v)) == v);
  }
  CHECK(parse_rational("-1/3") == Rational(-1, 3));
}
