#include <algorithm>
#include <ostream>
#include <random>

#include <json.hpp>

#include "mtree/corpus.hpp"

namespace mtree {

namespace {

// Draft tree kept in rendering order; MTree itself always sorts children.
struct Draft {
  bool leaf = true;
  Op op = Op::sum;
  Form form = Form::n;
  Rational value;
  int index = -1;
  std::vector<Draft> children;
};

class Generator {
 public:
  explicit Generator(const SyntheticOptions& o) : o_(o), rng_(o.seed) {
    std::vector<double> weights;
    for (const auto& [arity, w] : o.branch_distribution) {
      if (arity < 2) throw InputError("branch arities must be at least 2");
      arities_.push_back(arity);
      weights.push_back(w);
    }
    if (arities_.empty()) throw InputError("empty branch distribution");
    arity_ = std::discrete_distribution<int>(weights.begin(), weights.end());
  }

  Draft root() {
    static constexpr Op ops[] = {Op::sum, Op::product, Op::neg_product, Op::recip_sum};
    const Op op = ops[std::uniform_int_distribution<int>(0, 3)(rng_)];
    return node(op, 1);
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  int draw_arity() { return arities_[static_cast<std::size_t>(arity_(rng_))]; }

  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  Draft leaf(std::initializer_list<Form> forms) {
    Draft d;
    d.value = std::uniform_int_distribution<int>(o_.min_value, o_.max_value)(rng_);
    const auto pick = std::uniform_int_distribution<std::size_t>(0, forms.size() - 1)(rng_);
    d.form = *(forms.begin() + pick);
    return d;
  }

  // The grammar below only produces trees that are already in canonical
  // shape: sums never nest directly, products hold positive factors, a
  // product holding a reciprocal sum has no other divisor, and reciprocal
  // sums only hold positive terms (so their sign never flips).
  Draft node(Op op, int level) {
    Draft d;
    d.leaf = false;
    d.op = op;
    const int arity = draw_arity();
    const bool deeper = level < o_.max_depth;
    if (op == Op::sum || op == Op::recip_sum) {
      for (int i = 0; i < arity; ++i) {
        if (deeper && coin(o_.subtree_probability)) {
          const Op child = (op == Op::sum && coin(0.5)) ? Op::neg_product : Op::product;
          d.children.push_back(node(child, level + 1));
        } else if (op == Op::sum) {
          d.children.push_back(leaf({Form::n, Form::inv, Form::neg, Form::neg_inv}));
        } else {
          d.children.push_back(leaf({Form::n, Form::inv}));
        }
      }
    } else {
      const bool with_reciprocal = deeper && coin(o_.subtree_probability);
      const int slot = with_reciprocal ? std::uniform_int_distribution<int>(0, arity - 1)(rng_) : -1;
      for (int i = 0; i < arity; ++i) {
        if (i == slot) {
          d.children.push_back(node(Op::recip_sum, level + 1));
        } else if (with_reciprocal) {
          d.children.push_back(leaf({Form::n}));
        } else {
          d.children.push_back(leaf({Form::n, Form::inv}));
        }
      }
    }
    return d;
  }

  const SyntheticOptions& o_;
  std::mt19937_64 rng_;
  std::vector<int> arities_;
  std::discrete_distribution<int> arity_;
};

void shuffle(Draft& d, std::mt19937_64& rng) {
  std::shuffle(d.children.begin(), d.children.end(), rng);
  for (Draft& c : d.children) shuffle(c, rng);
}

void number_leaves(Draft& d, std::vector<Rational>& quantities) {
  if (d.leaf) {
    d.index = static_cast<int>(quantities.size());
    quantities.push_back(d.value);
    return;
  }
  for (Draft& c : d.children) number_leaves(c, quantities);
}

MTree to_tree(const Draft& d) {
  if (d.leaf) return MTree::leaf(Quantity::problem(d.value, d.index), d.form);
  std::vector<MTree> children;
  for (const Draft& c : d.children) children.push_back(to_tree(c));
  return MTree::node(d.op, std::move(children));
}

Expr to_expr(const Draft& d) {
  if (d.leaf) {
    Expr v = Expr::leaf(Quantity::problem(d.value, d.index));
    switch (d.form) {
      case Form::n: return v;
      case Form::inv: return lit(1) / v;
      case Form::neg: return -v;
      case Form::neg_inv: return -(lit(1) / v);
    }
  }
  Expr acc = to_expr(d.children.front());
  const BinaryOp join = (d.op == Op::sum || d.op == Op::recip_sum) ? BinaryOp::add : BinaryOp::mul;
  for (std::size_t i = 1; i < d.children.size(); ++i) {
    acc = Expr::binary(join, acc, to_expr(d.children[i]));
  }
  if (d.op == Op::neg_product) return -acc;
  if (d.op == Op::recip_sum) return lit(1) / acc;
  return acc;
}

// Infix text. `operand` asks for a rendering safe to use as a factor.
std::string infix(const Draft& d, bool operand) {
  if (d.leaf) {
    const std::string v = format_rational(d.value);
    switch (d.form) {
      case Form::n: return v;
      case Form::inv: return operand ? "(1/" + v + ")" : "1/" + v;
      case Form::neg: return operand ? "(-" + v + ")" : "-" + v;
      case Form::neg_inv: return operand ? "(-1/" + v + ")" : "-1/" + v;
    }
  }
  std::string body;
  if (d.op == Op::sum || d.op == Op::recip_sum) {
    for (std::size_t i = 0; i < d.children.size(); ++i) {
      const Draft& c = d.children[i];
      const bool negative = (c.leaf && (c.form == Form::neg || c.form == Form::neg_inv)) ||
                            (!c.leaf && c.op == Op::neg_product);
      if (negative && c.leaf) {
        body += std::string(c.form == Form::neg ? "-" : "-1/") + format_rational(c.value);
      } else {
        if (i && !negative) body += "+";
        body += infix(c, false);
      }
    }
    if (d.op == Op::recip_sum) return "1/(" + body + ")";
    return operand ? "(" + body + ")" : body;
  }
  for (std::size_t i = 0; i < d.children.size(); ++i) {
    const Draft& c = d.children[i];
    if (c.leaf && c.form == Form::inv) {
      body += (i ? "/" : "1/") + format_rational(c.value);
    } else {
      if (i) body += "*";
      body += infix(c, true);
    }
  }
  if (d.op == Op::neg_product) return operand ? "(-(" + body + "))" : "-(" + body + ")";
  return operand ? "(" + body + ")" : body;
}

void render_tokens(const Draft& d, bool top, std::vector<std::string>& out) {
  if (d.leaf) {
    if (d.form == Form::neg || d.form == Form::neg_inv) out.push_back("minus");
    if (d.form == Form::inv || d.form == Form::neg_inv) out.push_back("per");
    out.push_back("N" + std::to_string(d.index));
    return;
  }
  if (d.op == Op::neg_product) out.push_back("minus");
  if (d.op == Op::recip_sum) out.push_back("per");
  const bool wrap = !top || d.op == Op::neg_product || d.op == Op::recip_sum;
  if (wrap) out.push_back("(");
  const char* joiner = (d.op == Op::sum || d.op == Op::recip_sum) ? "plus" : "times";
  for (std::size_t i = 0; i < d.children.size(); ++i) {
    if (i) out.push_back(joiner);
    render_tokens(d.children[i], false, out);
  }
  if (wrap) out.push_back(")");
}

}  // namespace

std::vector<SyntheticSample> generate_synthetic(const SyntheticOptions& options) {
  if (options.count == 0) throw InputError("count must be positive");
  if (options.max_depth < 1) throw InputError("max_depth must be at least 1");
  if (options.min_value < 1 || options.max_value < options.min_value) {
    throw InputError("bad leaf value range");
  }
  Generator gen(options);
  std::vector<SyntheticSample> out;
  out.reserve(options.count);
  while (out.size() < options.count) {
    Draft draft = gen.root();
    shuffle(draft, gen.rng());

    SyntheticSample s;
    number_leaves(draft, s.quantities);
    const MTree drafted = to_tree(draft);
    const Expr e = to_expr(draft);
    try {
      s.gold = build_mtree(canonicalize(e));
      s.answer = eval_exact(e);
    } catch (const Error&) {
      continue;
    }
    // The grammar is canonical by construction; this guards it.
    if (!mtree_equal(s.gold, drafted)) continue;

    s.id = "syn-" + std::to_string(out.size());
    s.tokens = {"compute"};
    render_tokens(draft, true, s.tokens);
    s.tokens.push_back("?");
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (s.tokens[i].size() > 1 && s.tokens[i][0] == 'N' && std::isdigit(static_cast<unsigned char>(s.tokens[i][1]))) {
        s.number_positions.push_back(i);
      }
    }
    s.expression = infix(draft, false);
    out.push_back(std::move(s));
  }
  return out;
}

void write_math23k(std::ostream& out, const std::vector<SyntheticSample>& samples) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SyntheticSample& s : samples) {
    std::string text;
    std::size_t k = 0;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) text += " ";
      if (k < s.number_positions.size() && s.number_positions[k] == i) {
        text += format_rational(s.quantities[k++]);
      } else {
        text += s.tokens[i];
      }
    }
    arr.push_back({{"id", s.id},
                   {"original_text", text},
                   {"equation", "x=" + s.expression},
                   {"ans", format_rational(s.answer)}});
  }
  out << arr.dump(1) << "\n";
}

}  // namespace mtree
