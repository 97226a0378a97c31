#include <doctest.h>

#include "generators.hpp"
#include "mtree/expr.hpp"

using namespace mtree;

namespace {
Rational value(const char* text, const ParseOptions& o = {}) { return eval_exact(parse(text, o)); }
}

TEST_CASE("precedence and associativity") {
  CHECK(value("2+3*4") == 14);
  CHECK(value("(2+3)*4") == 20);
  CHECK(value("10-4-3") == 3);
  CHECK(value("24/4/2") == 3);
  CHECK(value("-2^2") == -4);
  CHECK(value("(-2)^2") == 4);
  CHECK(value("2^3^2") == 64);  // left-associative
  CHECK(value("2**3") == 8);
  CHECK(value("2*-3") == -6);
  CHECK(value("2^-1") == Rational(1, 2));
}

TEST_CASE("percent literals divide by one hundred") {
  CHECK(value("25%") == Rational(1, 4));
  CHECK(value("40*25%") == 10);
  CHECK(value("12.5%") == Rational(1, 8));
  const Expr e = parse("50%");
  REQUIRE(e.kind() == Expr::Kind::leaf);
  CHECK(e.quantity().value == Rational(1, 2));
}

TEST_CASE("placeholders bind to the number map") {
  ParseOptions o;
  o.number_map = {Rational(13), Rational(10), Rational(3)};
  const Expr e = parse("N0*(N1+N2)", o);
  CHECK(eval_exact(e) == 169);
  CHECK(e.lhs().quantity().origin == Origin::problem_number);
  CHECK(e.lhs().quantity().index == 0);
  CHECK_THROWS_AS(parse("N3", o), ParseError);
}

TEST_CASE("fraction literals only with a predicate") {
  const Expr plain = parse("(1/4)");
  CHECK(plain.kind() == Expr::Kind::binary);
  ParseOptions o;
  o.accept_fraction_literal = [](const Rational& v) { return v == Rational(1, 4); };
  const Expr lit = parse("(1/4)", o);
  REQUIRE(lit.kind() == Expr::Kind::leaf);
  CHECK(lit.quantity().value == Rational(1, 4));
  CHECK(parse("(1/3)", o).kind() == Expr::Kind::binary);
}

TEST_CASE("malformed input reports a position") {
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("3+"), ParseError);
  CHECK_THROWS_AS(parse("(3+4"), ParseError);
  CHECK_THROWS_AS(parse("3 4"), ParseError);
  CHECK_THROWS_AS(parse("3+a"), ParseError);
  try {
    parse("12+*4");
    FAIL("no throw");
  } catch (const ParseError& e) {
    CHECK(e.position() == 3);
  }
}

TEST_CASE("evaluation errors") {
  CHECK_THROWS_AS(value("1/0"), EvalError);
  CHECK_THROWS_AS(value("1/(2-2)"), EvalError);
  CHECK_THROWS_AS(value("2^13"), EvalError);
  CHECK_THROWS_AS(value("2^0.5"), EvalError);
  CHECK_THROWS_AS(value("0^-1"), EvalError);
  CHECK(value("2^12") == 4096);
  CHECK(value("5^0") == 1);
}

TEST_CASE("print re-parses to the same tree") {
  testing::Rng rng(1);
  testing::ExprShape shape;
  shape.fractions = false;
  for (int i = 0; i < 500; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_expr(rng, shape, values);
    ParseOptions o;
    o.number_map = values;
    CHECK(parse(print(e), o) == e);
  }
}

TEST_CASE("tokenize") {
  const auto t = tokenize("3.5 * N1 ^ 2");
  REQUIRE(t.size() == 6);
  CHECK(t[0].kind == TokenKind::number);
  CHECK(t[2].kind == TokenKind::placeholder);
  CHECK(t[3].kind == TokenKind::caret);
  CHECK(t[5].kind == TokenKind::end);
  CHECK(tokenize("2**3")[1].kind == TokenKind::caret);
}
