#include <doctest.h>

#include <map>

#include "generators.hpp"
#include "mtree/canon.hpp"
#include "mtree/mtree.hpp"

using namespace mtree;

namespace {

CanonicalSum canon(const char* text) { return canonicalize(parse(text)); }
std::string rendered(const char* text) { return render(canon(text)); }

// Leaf multiset of the fully distributed form, computed without expanding:
// a product of sums with m and n terms repeats every left leaf n times and
// every right leaf m times. Handles + - * unary minus and division by a leaf.
struct Spread {
  long terms = 1;
  std::map<Rational, long> leaves;
};

Spread spread(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::leaf: {
      Spread s;
      s.leaves[e.quantity().value] = 1;
      return s;
    }
    case Expr::Kind::negate:
      return spread(e.operand());
    case Expr::Kind::binary:
      break;
  }
  Spread a = spread(e.lhs()), b = spread(e.rhs());
  Spread out;
  if (e.op() == BinaryOp::add || e.op() == BinaryOp::sub) {
    out.terms = a.terms + b.terms;
    out.leaves = a.leaves;
    for (auto& [v, n] : b.leaves) out.leaves[v] += n;
  } else {
    out.terms = a.terms * b.terms;
    for (auto& [v, n] : a.leaves) out.leaves[v] += n * b.terms;
    for (auto& [v, n] : b.leaves) out.leaves[v] += n * a.terms;
  }
  return out;
}

std::map<Rational, long> canonical_leaves(const CanonicalSum& c) {
  std::map<Rational, long> out;
  for (const Term& t : c.terms) {
    for (const Factor& f : t.factors) {
      REQUIRE(f.is_quantity());
      ++out[f.quantity().value];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("distributes and orders terms") {
  CHECK(rendered("13*(10+3)-40") == "3*13 + 10*13 - 40");
  CHECK(rendered("(10+3)*13-40") == "3*13 + 10*13 - 40");
  CHECK(rendered("-40+13*3+10*13") == "3*13 + 10*13 - 40");
  // A unit factor inside a product is dropped.
  CHECK(rendered("(1+2)*(3+4)") == "2*3 + 2*4 + 3 + 4");
  CHECK(rendered("1/(3+4)") == "1/(3 + 4)");
}

TEST_CASE("division by a sum keeps a reciprocal") {
  CHECK(rendered("2/(3+4)") == "2/(3 + 4)");
  CHECK(rendered("5/2") == "5/2");
  const CanonicalSum c = canon("2/(3+4)");
  REQUIRE(c.terms.size() == 1);
  REQUIRE(c.terms[0].factors.size() == 2);
  CHECK(c.terms[0].factors[0].is_quantity());
  CHECK_FALSE(c.terms[0].factors[1].is_quantity());
}

TEST_CASE("constants are never folded") {
  CHECK(canon("2+3").terms.size() == 2);
  CHECK(canon("2*3").terms[0].factors.size() == 2);
  CHECK(canon("4-4").terms.size() == 2);
  CHECK(rendered("4-4") == "4 - 4");
  CHECK(rendered("-4+4") == "4 - 4");
}

TEST_CASE("one merged denominator per term") {
  const CanonicalSum a = canon("7/(2*(3+5))");
  CHECK(a == canon("7/2/(3+5)"));
  CHECK(a == canon("7/(2*3+2*5)"));
  CHECK(a == canon("7*(1/(3+5))/2"));
}

TEST_CASE("reciprocal sums are sign-normalized") {
  CHECK(canon("1/(3-5)") == canon("-1/(5-3)"));
  CHECK(canon("2/(3-5)") == canon("-(2/(-3+5))"));
  CHECK(canon("1/(-3-5)") == canon("-1/(3+5)"));
  // A sign tie among terms that differ only in sign.
  CHECK(canon("81/(0.7-4)/(10+10-(10-11))") == canon("81*(1/(-(-(0.7-4)*(10+10+-(10-11)))))"));
}

TEST_CASE("sums with divisors are put over a common denominator before inverting") {
  CHECK(canon("1/((2+3)/(4+5))") == canon("(4+5)/(2+3)"));
  CHECK(canon("6/((2+3)/7)") == canon("6*7/(2+3)"));
  CHECK(canon("1/(1/6+1/3)") == canon("3*6/(3+6)"));
  // The common denominator is the least common multiple over divisor atoms.
  CHECK(canon("1/(3/(5*11)+7/5)") == canon("5*11/(3+7*11)"));
  CHECK(canon("2/(3/5)/(7/11+13)") == canon("-2/(-(3/5)*(7/11+13))"));
}

TEST_CASE("powers unroll") {
  CHECK(canon("3^2") == canon("3*3"));
  CHECK(canon("(1+2)^2") == canon("(1+2)*(1+2)"));
  CHECK(canon("2^-2") == canon("1/(2*2)"));
  CHECK(canon("(1+2)^-1") == canon("1/(1+2)"));
}

TEST_CASE("failures") {
  CHECK_THROWS_AS(canon("1/(2-2)"), CanonError);
  CHECK_THROWS_AS(canon("3/0"), CanonError);
  CHECK_THROWS_AS(canon("2^13"), EvalError);
  CHECK_NOTHROW(canon("(1+2)^12"));  // exactly 4096 terms
  CHECK_THROWS_AS(canon("(1+2+3)^12"), CanonError);
  CanonOptions small;
  small.max_terms = 3;
  CHECK_THROWS_AS(canonicalize(parse("(1+2)*(3+4)"), small), CanonError);
}

TEST_CASE("ordering keys") {
  const Factor a{Quantity::literal(2), false};
  const Factor b{Quantity::literal(3), false};
  const Factor inv{Quantity::literal(2), true};
  const Factor r{ReciprocalSum{canon("1+2").terms}, false};
  CHECK(compare(a, b) < 0);
  CHECK(compare(a, inv) < 0);
  CHECK(compare(b, r) < 0);
  const Term plus{1, {a}}, minus{-1, {a}};
  CHECK(compare(plus, minus) < 0);
  // Origins are carried, never compared.
  CHECK(compare(Factor{Quantity::literal(2), false}, Factor{Quantity::problem(2, 0), false}) == 0);
  CHECK(canon("4*(2+3)") == canonicalize(parse("N0*(N1+N2)", ParseOptions{{4, 2, 3}, {}})));
}

TEST_CASE("value preservation on random expressions") {
  testing::Rng rng(3);
  testing::ExprShape shape;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_valid_expr(rng, shape, values);
    CHECK(fold(canonicalize(e)) == eval_exact(e));
  }
}

TEST_CASE("render re-parses to the same canonical form") {
  testing::Rng rng(4);
  testing::ExprShape shape;
  shape.fractions = false;
  for (int i = 0; i < 500; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_valid_expr(rng, shape, values);
    const std::string once = render(canonicalize(e));
    CAPTURE(print(e));
    CHECK(render(canonicalize(parse(once))) == once);
  }
}

TEST_CASE("canonicalization is idempotent through the tree") {
  testing::Rng rng(5);
  testing::ExprShape shape;
  shape.fractions = false;
  for (int i = 0; i < 300; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_valid_expr(rng, shape, values);
    const MTree t = build_mtree(canonicalize(e));
    CHECK(build_mtree(canonicalize(parse(render(canonicalize(e))))) == t);
  }
}

TEST_CASE("no constant disappears or appears") {
  testing::Rng rng(6);
  testing::ExprShape shape;
  shape.division = false;
  shape.powers = false;
  shape.fractions = false;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_expr(rng, shape, values);
    const CanonicalSum c = canonicalize(e);
    const Spread s = spread(e);
    CHECK(static_cast<long>(c.terms.size()) == s.terms);
    CHECK(canonical_leaves(c) == s.leaves);
  }
}
