#include "mtree/expr.hpp"

#include <cctype>
#include <optional>
#include <stdexcept>

namespace mtree {

std::strong_ordering compare(const Quantity& a, const Quantity& b) {
  if (auto c = compare(a.value, b.value); c != 0) return c;
  if (auto c = a.origin <=> b.origin; c != 0) return c;
  return a.index <=> b.index;
}

Expr Expr::leaf(Quantity q) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{ExprNode::Leaf{std::move(q)}}));
}

Expr Expr::negate(Expr operand) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{ExprNode::Negate{std::move(operand)}}));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const ExprNode>(
      ExprNode{ExprNode::Binary{op, std::move(lhs), std::move(rhs)}}));
}

Expr::Kind Expr::kind() const { return static_cast<Kind>(node_->data.index()); }
const Quantity& Expr::quantity() const { return std::get<ExprNode::Leaf>(node_->data).quantity; }
const Expr& Expr::operand() const { return std::get<ExprNode::Negate>(node_->data).operand; }
BinaryOp Expr::op() const { return std::get<ExprNode::Binary>(node_->data).op; }
const Expr& Expr::lhs() const { return std::get<ExprNode::Binary>(node_->data).lhs; }
const Expr& Expr::rhs() const { return std::get<ExprNode::Binary>(node_->data).rhs; }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::leaf:
      return a.quantity() == b.quantity();
    case Expr::Kind::negate:
      return a.operand() == b.operand();
    case Expr::Kind::binary:
      return a.op() == b.op() && a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
  return false;
}

// ---------------------------------------------------------------------------
// Tokenizer

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  auto is_digit = [&](std::size_t k) {
    return k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]));
  };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_digit(i)) {
      while (is_digit(i)) ++i;
      if (i < text.size() && text[i] == '.') {
        if (!is_digit(i + 1)) throw ParseError("malformed decimal literal", start);
        ++i;
        while (is_digit(i)) ++i;
      }
      if (i < text.size() && text[i] == '%') {
        ++i;
        tokens.push_back({TokenKind::percent, std::string(text.substr(start, i - start)), start});
      } else {
        tokens.push_back({TokenKind::number, std::string(text.substr(start, i - start)), start});
      }
      continue;
    }
    if (c == 'N' && is_digit(i + 1)) {
      ++i;
      while (is_digit(i)) ++i;
      tokens.push_back({TokenKind::placeholder, std::string(text.substr(start, i - start)), start});
      continue;
    }
    TokenKind kind;
    std::size_t width = 1;
    switch (c) {
      case '+': kind = TokenKind::plus; break;
      case '-': kind = TokenKind::minus; break;
      case '*':
        if (i + 1 < text.size() && text[i + 1] == '*') {
          kind = TokenKind::caret;
          width = 2;
        } else {
          kind = TokenKind::star;
        }
        break;
      case '/': kind = TokenKind::slash; break;
      case '^': kind = TokenKind::caret; break;
      case '(': kind = TokenKind::lparen; break;
      case ')': kind = TokenKind::rparen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
    tokens.push_back({kind, std::string(text.substr(start, width)), start});
    i += width;
  }
  tokens.push_back({TokenKind::end, "", text.size()});
  return tokens;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser
//
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := ('-' | '+') unary | power
//   power    := primary ('^' exponent)*
//   exponent := ('-' | '+') exponent | primary
//   primary  := number | percent | placeholder | fraction | '(' expr ')'

namespace {

class Parser {
 public:
  Parser(std::vector<Token> tokens, const ParseOptions& options)
      : tokens_(std::move(tokens)), options_(options) {}

  Expr parse_all() {
    if (peek().kind == TokenKind::end) throw ParseError("empty expression", 0);
    Expr e = parse_expr();
    if (peek().kind != TokenKind::end) {
      throw ParseError("unexpected token '" + peek().text + "'", peek().position);
    }
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t k = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[k];
  }
  const Token& advance() { return tokens_[pos_++]; }

  Expr parse_expr() {
    Expr lhs = parse_term();
    while (peek().kind == TokenKind::plus || peek().kind == TokenKind::minus) {
      const BinaryOp op = advance().kind == TokenKind::plus ? BinaryOp::add : BinaryOp::sub;
      lhs = Expr::binary(op, std::move(lhs), parse_term());
    }
    return lhs;
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    while (peek().kind == TokenKind::star || peek().kind == TokenKind::slash) {
      const BinaryOp op = advance().kind == TokenKind::star ? BinaryOp::mul : BinaryOp::div;
      lhs = Expr::binary(op, std::move(lhs), parse_unary());
    }
    return lhs;
  }

  Expr parse_unary() {
    if (peek().kind == TokenKind::minus) {
      advance();
      return Expr::negate(parse_unary());
    }
    if (peek().kind == TokenKind::plus) {
      advance();
      return parse_unary();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    while (peek().kind == TokenKind::caret) {
      advance();
      base = Expr::binary(BinaryOp::pow, std::move(base), parse_exponent());
    }
    return base;
  }

  Expr parse_exponent() {
    if (peek().kind == TokenKind::minus) {
      advance();
      return Expr::negate(parse_exponent());
    }
    if (peek().kind == TokenKind::plus) {
      advance();
      return parse_exponent();
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& tok = peek();
    switch (tok.kind) {
      case TokenKind::number:
        advance();
        return lit(parse_decimal(tok.text));
      case TokenKind::percent: {
        advance();
        const std::string digits = tok.text.substr(0, tok.text.size() - 1);
        return lit(Rational(parse_decimal(digits) / 100));
      }
      case TokenKind::placeholder: {
        advance();
        const auto k = std::stoul(tok.text.substr(1));
        if (k >= options_.number_map.size()) {
          throw ParseError("unknown placeholder " + tok.text, tok.position);
        }
        return Expr::leaf(Quantity::problem(options_.number_map[k], static_cast<int>(k)));
      }
      case TokenKind::lparen: {
        if (auto fraction = try_fraction_literal()) return *fraction;
        advance();
        Expr inner = parse_expr();
        if (peek().kind != TokenKind::rparen) {
          throw ParseError("expected ')'", peek().position);
        }
        advance();
        return inner;
      }
      case TokenKind::end:
        throw ParseError("unexpected end of expression", tok.position);
      default:
        throw ParseError("unexpected token '" + tok.text + "'", tok.position);
    }
  }

  std::optional<Expr> try_fraction_literal() {
    if (!options_.accept_fraction_literal) return std::nullopt;
    const Token& num = peek(1);
    const Token& slash = peek(2);
    const Token& den = peek(3);
    const Token& close = peek(4);
    if (num.kind != TokenKind::number || slash.kind != TokenKind::slash ||
        den.kind != TokenKind::number || close.kind != TokenKind::rparen) {
      return std::nullopt;
    }
    const Rational d = parse_decimal(den.text);
    if (d == 0) return std::nullopt;
    const Rational value = Rational(parse_decimal(num.text) / d);
    if (!options_.accept_fraction_literal(value)) return std::nullopt;
    pos_ += 5;
    return lit(value);
  }

  std::vector<Token> tokens_;
  const ParseOptions& options_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, const ParseOptions& options) {
  return Parser(tokenize(text), options).parse_all();
}

// ---------------------------------------------------------------------------

std::string print(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::leaf: {
      const Quantity& q = e.quantity();
      if (q.origin == Origin::problem_number) return "N" + std::to_string(q.index);
      return format_rational(q.value);
    }
    case Expr::Kind::negate:
      return "(-" + print(e.operand()) + ")";
    case Expr::Kind::binary:
      return "(" + print(e.lhs()) + static_cast<char>(e.op()) + print(e.rhs()) + ")";
  }
  return {};
}

int checked_exponent(const Expr& exponent) {
  const Rational k = eval_exact(exponent);
  if (!is_integer(k)) throw EvalError("non-integer exponent " + format_rational(k));
  if (k > kMaxExponent || k < -kMaxExponent) {
    throw EvalError("exponent " + format_rational(k) + " outside [-12, 12]");
  }
  return boost::multiprecision::numerator(k).convert_to<int>();
}

Rational eval_exact(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::leaf:
      return e.quantity().value;
    case Expr::Kind::negate:
      return -eval_exact(e.operand());
    case Expr::Kind::binary:
      break;
  }
  const Rational a = eval_exact(e.lhs());
  if (e.op() == BinaryOp::pow) {
    const int k = checked_exponent(e.rhs());
    if (k < 0 && a == 0) throw EvalError("division by zero");
    Rational result = 1;
    for (int i = 0; i < std::abs(k); ++i) result *= a;
    return k < 0 ? Rational(1 / result) : result;
  }
  const Rational b = eval_exact(e.rhs());
  switch (e.op()) {
    case BinaryOp::add: return a + b;
    case BinaryOp::sub: return a - b;
    case BinaryOp::mul: return a * b;
    case BinaryOp::div:
      if (b == 0) throw EvalError("division by zero");
      return a / b;
    case BinaryOp::pow: break;
  }
  return {};
}

}  // namespace mtree
