#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mtree/errors.hpp"
#include "mtree/rational.hpp"

namespace mtree {

enum class Origin : std::uint8_t { problem_number, constant, literal };

/// A number appearing in an expression. `index` is the problem-number
/// slot (N<k>) or the constant slot; -1 for plain literals.
struct Quantity {
  Rational value;
  Origin origin = Origin::literal;
  int index = -1;

  static Quantity literal(Rational v) { return {std::move(v), Origin::literal, -1}; }
  static Quantity problem(Rational v, int k) { return {std::move(v), Origin::problem_number, k}; }
  static Quantity constant(Rational v, int k) { return {std::move(v), Origin::constant, k}; }

  friend bool operator==(const Quantity&, const Quantity&) = default;
};

/// Total order on (value, origin, index).
std::strong_ordering compare(const Quantity& a, const Quantity& b);

enum class BinaryOp : char { add = '+', sub = '-', mul = '*', div = '/', pow = '^' };

struct ExprNode;

/// Immutable binary syntax tree of an infix arithmetic expression. Copies
/// share structure.
class Expr {
 public:
  enum class Kind { leaf, negate, binary };

  static Expr leaf(Quantity q);
  static Expr negate(Expr operand);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

  Kind kind() const;
  const Quantity& quantity() const;   // leaf only
  const Expr& operand() const;        // negate only
  BinaryOp op() const;                // binary only
  const Expr& lhs() const;            // binary only
  const Expr& rhs() const;            // binary only

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  struct Leaf {
    Quantity quantity;
  };
  struct Negate {
    Expr operand;
  };
  struct Binary {
    BinaryOp op;
    Expr lhs;
    Expr rhs;
  };
  std::variant<Leaf, Negate, Binary> data;
};

inline Expr lit(const Rational& v) { return Expr::leaf(Quantity::literal(v)); }
inline Expr lit(long v) { return lit(Rational(v)); }
inline Expr operator+(Expr a, Expr b) { return Expr::binary(BinaryOp::add, std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return Expr::binary(BinaryOp::sub, std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return Expr::binary(BinaryOp::mul, std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return Expr::binary(BinaryOp::div, std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return Expr::negate(std::move(a)); }
inline Expr pow(Expr base, Expr exponent) {
  return Expr::binary(BinaryOp::pow, std::move(base), std::move(exponent));
}

enum class TokenKind { number, percent, placeholder, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;
};

/// Splits expression text into tokens. Whitespace is skipped; "**" is
/// read as "^".
std::vector<Token> tokenize(std::string_view text);

struct ParseOptions {
  /// Values substituted for N0, N1, ...
  std::vector<Rational> number_map;
  /// When set, a parenthesized integer fraction "(p/q)" whose value the
  /// predicate accepts becomes a single literal instead of a division.
  std::function<bool(const Rational&)> accept_fraction_literal;
};

Expr parse(std::string_view text, const ParseOptions& options = {});

/// Fully parenthesized ASCII rendering. Problem numbers print as N<k>,
/// other leaves as their value.
std::string print(const Expr& e);

/// Exact value. Throws EvalError on division by zero and on exponents that
/// are not integers in [-12, 12].
Rational eval_exact(const Expr& e);

/// Exponent value of a `^` node, validated against the [-12, 12] bound.
int checked_exponent(const Expr& exponent);

inline constexpr int kMaxExponent = 12;

}  // namespace mtree
