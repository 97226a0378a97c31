#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtree/canon.hpp"

namespace mtree {

/// MTree operators. All of them are commutative over their children:
///   sum          +    a + b + ...
///   product      *    a * b * ...
///   neg_product  *-   -(a * b * ...)
///   recip_sum    +/   1 / (a + b + ...)
enum class Op : std::uint8_t { sum, product, neg_product, recip_sum };

/// Leaf forms n, 1/n, -n, -1/n.
enum class Form : std::uint8_t { n, inv, neg, neg_inv };

std::string_view symbol(Op op);
std::string_view symbol(Form form);
std::optional<Op> parse_op(std::string_view text);
std::optional<Form> parse_form(std::string_view text);

/// Unified multi-branch expression tree. Children are kept in canonical
/// order, so structural equality is permutation-invariant equality.
///
/// Leaves of a form-tagged MTree carry a Form; leaves of a RefMTree carry
/// none and express sign and reciprocal through unary *- and +/ nodes.
/// Leaf identity is the quantity's value and form; the quantity's origin is
/// carried along but never compared.
class MTree {
 public:
  static MTree leaf(Quantity q, std::optional<Form> form = Form::n);
  /// Children are sorted on construction.
  static MTree node(Op op, std::vector<MTree> children);

  bool is_leaf() const { return is_leaf_; }
  Op op() const { return op_; }
  const std::vector<MTree>& children() const { return children_; }
  const Quantity& quantity() const { return quantity_; }
  std::optional<Form> form() const { return form_; }

  friend bool operator==(const MTree& a, const MTree& b) { return compare(a, b) == 0; }

  /// Canonical child order: operator nodes before leaves; operators by
  /// kind (*, +, +/, *-), then by children, larger first; leaves by value,
  /// larger first, then by form.
  friend std::strong_ordering compare(const MTree& a, const MTree& b);

 private:
  MTree() = default;

  bool is_leaf_ = true;
  Op op_ = Op::sum;
  std::vector<MTree> children_;
  Quantity quantity_;
  std::optional<Form> form_;
};

using RefMTree = MTree;

MTree build_mtree(const CanonicalSum& sum);

/// Convenience: parse, canonicalize, build.
MTree build_mtree(std::string_view expression, const ParseOptions& options = {});

/// Replaces leaf forms with unary *- / +/ nodes: -n -> *-(n), 1/n -> +/(n),
/// -1/n -> *-(+/(n)).
RefMTree to_refmtree(const MTree& tree);

bool is_refined(const MTree& tree);

/// Throws EvalError on a reciprocal of zero.
Rational eval_mtree(const MTree& tree);

bool mtree_equal(const MTree& a, const MTree& b);

/// Largest child count over operator nodes; 1 for a bare leaf.
int branch_number(const MTree& tree);

/// Number of operator levels on the longest root-to-leaf path; 0 for a leaf.
int depth(const MTree& tree);

std::size_t leaf_count(const MTree& tree);

/// Empty when the tree obeys the MTree arity rules (operators have at least
/// two children, except *- over a single +/ node, or unary *- / +/ in a
/// RefMTree); otherwise a description of the first violation.
std::optional<std::string> validate(const MTree& tree);

// ---------------------------------------------------------------------------
// Paths

struct MPath {
  std::vector<Op> ops;
  Rational leaf_value;
  std::optional<Form> leaf_form;
};

std::strong_ordering compare(const MPath& a, const MPath& b);
inline bool operator==(const MPath& a, const MPath& b) { return compare(a, b) == 0; }

struct MPathLess {
  bool operator()(const MPath& a, const MPath& b) const { return compare(a, b) < 0; }
};

/// Multiset of root-to-leaf paths; duplicates are kept with multiplicity.
class PathMultiset {
 public:
  void insert(MPath path, std::size_t count = 1);
  std::size_t count(const MPath& path) const;
  std::size_t size() const { return total_; }
  const std::map<MPath, std::size_t, MPathLess>& entries() const { return entries_; }

  friend bool operator==(const PathMultiset& a, const PathMultiset& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::map<MPath, std::size_t, MPathLess> entries_;
  std::size_t total_ = 0;
};

PathMultiset paths(const MTree& tree);

std::string to_string(const MPath& path);

// ---------------------------------------------------------------------------
// Renderings

/// Parenthesized prefix form, e.g. "+(*(13,10),*(13,3),-40)". Leaves print
/// as value with a form prefix: "13", "-40", "1/4", "-1/4"; non-terminating
/// values as "(p/q)". RefMTree leaves print bare.
std::string to_prefix(const MTree& tree);

/// Inverse of to_prefix. Leaves come back as literals; with `refined` they
/// carry no form.
MTree from_prefix(std::string_view text, bool refined = false);

/// Nested-array rendering: an operator node is an array whose first element
/// is the operator symbol, a leaf is a string in prefix leaf notation, e.g.
/// ["+",["*","13","10"],["*","13","3"],"-40"].
std::string to_json(const MTree& tree);
MTree from_json(std::string_view text, bool refined = false);

}  // namespace mtree
