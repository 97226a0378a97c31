#include "mtree/mtree.hpp"

#include <algorithm>

#include <json.hpp>

namespace mtree {

std::string_view symbol(Op op) {
  switch (op) {
    case Op::sum: return "+";
    case Op::product: return "*";
    case Op::neg_product: return "*-";
    case Op::recip_sum: return "+/";
  }
  return "?";
}

std::string_view symbol(Form form) {
  switch (form) {
    case Form::n: return "n";
    case Form::inv: return "1/n";
    case Form::neg: return "-n";
    case Form::neg_inv: return "-1/n";
  }
  return "?";
}

std::optional<Op> parse_op(std::string_view text) {
  for (Op op : {Op::sum, Op::product, Op::neg_product, Op::recip_sum}) {
    if (symbol(op) == text) return op;
  }
  return std::nullopt;
}

std::optional<Form> parse_form(std::string_view text) {
  for (Form f : {Form::n, Form::inv, Form::neg, Form::neg_inv}) {
    if (symbol(f) == text) return f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

int op_rank(Op op) {
  switch (op) {
    case Op::product: return 0;
    case Op::sum: return 1;
    case Op::recip_sum: return 2;
    case Op::neg_product: return 3;
  }
  return 4;
}

}  // namespace

std::strong_ordering compare(const MTree& a, const MTree& b) {
  if (a.is_leaf_ != b.is_leaf_) {
    return a.is_leaf_ ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  if (a.is_leaf_) {
    if (auto c = compare(b.quantity_.value, a.quantity_.value); c != 0) return c;
    return a.form_ <=> b.form_;
  }
  if (auto c = op_rank(a.op_) <=> op_rank(b.op_); c != 0) return c;
  const std::size_t n = std::min(a.children_.size(), b.children_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = compare(a.children_[i], b.children_[i]); c != 0) return c;
  }
  return b.children_.size() <=> a.children_.size();
}

MTree MTree::leaf(Quantity q, std::optional<Form> form) {
  MTree t;
  t.is_leaf_ = true;
  t.quantity_ = std::move(q);
  t.form_ = form;
  return t;
}

MTree MTree::node(Op op, std::vector<MTree> children) {
  MTree t;
  t.is_leaf_ = false;
  t.op_ = op;
  t.children_ = std::move(children);
  std::stable_sort(t.children_.begin(), t.children_.end(),
                   [](const MTree& x, const MTree& y) { return compare(x, y) < 0; });
  return t;
}

// ---------------------------------------------------------------------------
// Construction

namespace {

MTree term_node(const Term& t);

MTree factor_node(const Factor& f) {
  if (f.is_quantity()) return MTree::leaf(f.quantity(), f.inverted ? Form::inv : Form::n);
  std::vector<MTree> children;
  for (const Term& t : f.reciprocal().terms) children.push_back(term_node(t));
  return MTree::node(Op::recip_sum, std::move(children));
}

MTree term_node(const Term& t) {
  const bool negative = t.sign < 0;
  if (t.factors.size() == 1) {
    const Factor& f = t.factors.front();
    if (f.is_quantity()) {
      const Form form = f.inverted ? (negative ? Form::neg_inv : Form::inv)
                                   : (negative ? Form::neg : Form::n);
      return MTree::leaf(f.quantity(), form);
    }
    MTree reciprocal = factor_node(f);
    if (!negative) return reciprocal;
    return MTree::node(Op::neg_product, {std::move(reciprocal)});
  }
  std::vector<MTree> children;
  for (const Factor& f : t.factors) children.push_back(factor_node(f));
  return MTree::node(negative ? Op::neg_product : Op::product, std::move(children));
}

}  // namespace

MTree build_mtree(const CanonicalSum& sum) {
  if (sum.terms.size() == 1) return term_node(sum.terms.front());
  std::vector<MTree> children;
  for (const Term& t : sum.terms) children.push_back(term_node(t));
  return MTree::node(Op::sum, std::move(children));
}

MTree build_mtree(std::string_view expression, const ParseOptions& options) {
  return build_mtree(canonicalize(parse(expression, options)));
}

RefMTree to_refmtree(const MTree& tree) {
  if (!tree.is_leaf()) {
    std::vector<MTree> children;
    for (const MTree& c : tree.children()) children.push_back(to_refmtree(c));
    return MTree::node(tree.op(), std::move(children));
  }
  MTree bare = MTree::leaf(tree.quantity(), std::nullopt);
  switch (tree.form().value_or(Form::n)) {
    case Form::n:
      return bare;
    case Form::neg:
      return MTree::node(Op::neg_product, {std::move(bare)});
    case Form::inv:
      return MTree::node(Op::recip_sum, {std::move(bare)});
    case Form::neg_inv:
      return MTree::node(Op::neg_product, {MTree::node(Op::recip_sum, {std::move(bare)})});
  }
  return bare;
}

bool is_refined(const MTree& tree) {
  if (tree.is_leaf()) return !tree.form().has_value();
  return std::all_of(tree.children().begin(), tree.children().end(),
                     [](const MTree& c) { return is_refined(c); });
}

// ---------------------------------------------------------------------------
// Queries

Rational eval_mtree(const MTree& tree) {
  if (tree.is_leaf()) {
    const Rational& v = tree.quantity().value;
    const Form form = tree.form().value_or(Form::n);
    if ((form == Form::inv || form == Form::neg_inv) && v == 0) {
      throw EvalError("reciprocal of zero");
    }
    switch (form) {
      case Form::n: return v;
      case Form::inv: return 1 / v;
      case Form::neg: return -v;
      case Form::neg_inv: return -1 / v;
    }
  }
  const bool additive = tree.op() == Op::sum || tree.op() == Op::recip_sum;
  Rational acc = additive ? 0 : 1;
  for (const MTree& c : tree.children()) {
    if (additive) {
      acc += eval_mtree(c);
    } else {
      acc *= eval_mtree(c);
    }
  }
  switch (tree.op()) {
    case Op::sum:
    case Op::product:
      return acc;
    case Op::neg_product:
      return -acc;
    case Op::recip_sum:
      if (acc == 0) throw EvalError("reciprocal of zero");
      return 1 / acc;
  }
  return acc;
}

bool mtree_equal(const MTree& a, const MTree& b) { return a == b; }

int branch_number(const MTree& tree) {
  if (tree.is_leaf()) return 1;
  int best = static_cast<int>(tree.children().size());
  for (const MTree& c : tree.children()) {
    if (!c.is_leaf()) best = std::max(best, branch_number(c));
  }
  return best;
}

int depth(const MTree& tree) {
  if (tree.is_leaf()) return 0;
  int deepest = 0;
  for (const MTree& c : tree.children()) deepest = std::max(deepest, depth(c));
  return deepest + 1;
}

std::size_t leaf_count(const MTree& tree) {
  if (tree.is_leaf()) return 1;
  std::size_t n = 0;
  for (const MTree& c : tree.children()) n += leaf_count(c);
  return n;
}

namespace {

std::optional<std::string> validate_node(const MTree& tree, bool refined) {
  if (tree.is_leaf()) return std::nullopt;
  const auto& kids = tree.children();
  if (kids.empty()) return std::string(symbol(tree.op())) + " node without children";
  if (kids.size() == 1) {
    const MTree& only = kids.front();
    const bool escape = tree.op() == Op::neg_product && !only.is_leaf() && only.op() == Op::recip_sum;
    const bool unary_ok = refined && (tree.op() == Op::neg_product || tree.op() == Op::recip_sum);
    if (!escape && !unary_ok) return std::string("unary ") + std::string(symbol(tree.op())) + " node";
  }
  for (const MTree& c : kids) {
    if (auto err = validate_node(c, refined)) return err;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate(const MTree& tree) {
  return validate_node(tree, is_refined(tree));
}

// ---------------------------------------------------------------------------
// Paths

std::strong_ordering compare(const MPath& a, const MPath& b) {
  const std::size_t n = std::min(a.ops.size(), b.ops.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = a.ops[i] <=> b.ops[i]; c != 0) return c;
  }
  if (auto c = a.ops.size() <=> b.ops.size(); c != 0) return c;
  if (auto c = compare(a.leaf_value, b.leaf_value); c != 0) return c;
  return a.leaf_form <=> b.leaf_form;
}

void PathMultiset::insert(MPath path, std::size_t count) {
  if (count == 0) return;
  entries_[std::move(path)] += count;
  total_ += count;
}

std::size_t PathMultiset::count(const MPath& path) const {
  auto it = entries_.find(path);
  return it == entries_.end() ? 0 : it->second;
}

namespace {

void collect_paths(const MTree& tree, std::vector<Op>& prefix, PathMultiset& out) {
  if (tree.is_leaf()) {
    out.insert(MPath{prefix, tree.quantity().value, tree.form()});
    return;
  }
  prefix.push_back(tree.op());
  for (const MTree& c : tree.children()) collect_paths(c, prefix, out);
  prefix.pop_back();
}

}  // namespace

PathMultiset paths(const MTree& tree) {
  PathMultiset out;
  std::vector<Op> prefix;
  collect_paths(tree, prefix, out);
  return out;
}

std::string to_string(const MPath& path) {
  std::string out = "(";
  for (std::size_t i = 0; i < path.ops.size(); ++i) {
    if (i) out += ",";
    out += symbol(path.ops[i]);
  }
  out += ";" + format_rational(path.leaf_value);
  if (path.leaf_form) out += "," + std::string(symbol(*path.leaf_form));
  return out + ")";
}

// ---------------------------------------------------------------------------
// Renderings

namespace {

std::string leaf_text(const MTree& leaf) {
  const std::string v = format_rational(leaf.quantity().value);
  switch (leaf.form().value_or(Form::n)) {
    case Form::n: return v;
    case Form::inv: return "1/" + v;
    case Form::neg: return "-" + v;
    case Form::neg_inv: return "-1/" + v;
  }
  return v;
}

MTree leaf_from_text(std::string_view text, bool refined) {
  Form form = Form::n;
  if (text.starts_with("-1/")) {
    form = Form::neg_inv;
    text.remove_prefix(3);
  } else if (text.starts_with("1/")) {
    form = Form::inv;
    text.remove_prefix(2);
  } else if (text.starts_with("-")) {
    form = Form::neg;
    text.remove_prefix(1);
  }
  if (refined && form != Form::n) {
    throw InputError("form-tagged leaf in a RefMTree: " + std::string(text));
  }
  Rational value;
  try {
    value = parse_rational(text);
  } catch (const std::exception&) {
    throw InputError("bad MTree leaf '" + std::string(text) + "'");
  }
  return MTree::leaf(Quantity::literal(value), refined ? std::nullopt : std::optional<Form>(form));
}

class PrefixReader {
 public:
  PrefixReader(std::string_view text, bool refined) : text_(text), refined_(refined) {}

  MTree read_all() {
    MTree t = read();
    if (pos_ != text_.size()) fail("trailing characters");
    return t;
  }

 private:
  MTree read() {
    for (Op op : {Op::neg_product, Op::recip_sum, Op::product, Op::sum}) {
      const std::string head = std::string(symbol(op)) + "(";
      if (text_.substr(pos_).starts_with(head)) {
        pos_ += head.size();
        std::vector<MTree> children;
        children.push_back(read());
        while (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          children.push_back(read());
        }
        if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
        ++pos_;
        return MTree::node(op, std::move(children));
      }
    }
    const std::size_t start = pos_;
    int nesting = 0;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(') ++nesting;
      if (c == ')') {
        if (nesting == 0) break;
        --nesting;
      }
      if (c == ',' && nesting == 0) break;
      ++pos_;
    }
    if (pos_ == start) fail("expected a leaf");
    return leaf_from_text(text_.substr(start, pos_ - start), refined_);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("MTree prefix text: " + what + " at position " + std::to_string(pos_));
  }

  std::string_view text_;
  bool refined_;
  std::size_t pos_ = 0;
};

nlohmann::json to_json_value(const MTree& tree) {
  if (tree.is_leaf()) return leaf_text(tree);
  nlohmann::json arr = nlohmann::json::array();
  arr.push_back(std::string(symbol(tree.op())));
  for (const MTree& c : tree.children()) arr.push_back(to_json_value(c));
  return arr;
}

MTree from_json_value(const nlohmann::json& j, bool refined) {
  if (j.is_string()) return leaf_from_text(j.get<std::string>(), refined);
  if (!j.is_array() || j.size() < 2 || !j[0].is_string()) {
    throw InputError("MTree JSON: expected a leaf string or [op, children...]");
  }
  const auto op = parse_op(j[0].get<std::string>());
  if (!op) throw InputError("MTree JSON: unknown operator " + j[0].dump());
  std::vector<MTree> children;
  for (std::size_t i = 1; i < j.size(); ++i) children.push_back(from_json_value(j[i], refined));
  return MTree::node(*op, std::move(children));
}

}  // namespace

std::string to_prefix(const MTree& tree) {
  if (tree.is_leaf()) return leaf_text(tree);
  std::string out(symbol(tree.op()));
  out += "(";
  for (std::size_t i = 0; i < tree.children().size(); ++i) {
    if (i) out += ",";
    out += to_prefix(tree.children()[i]);
  }
  return out + ")";
}

MTree from_prefix(std::string_view text, bool refined) {
  return PrefixReader(text, refined).read_all();
}

std::string to_json(const MTree& tree) { return to_json_value(tree).dump(); }

MTree from_json(std::string_view text, bool refined) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("MTree JSON: ") + e.what());
  }
  return from_json_value(j, refined);
}

}  // namespace mtree
