#pragma once

// Hand-rolled generators and oracles shared by the unit tests and the
// acceptance binary.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mtree/expr.hpp"
#include "mtree/mtree.hpp"

namespace mtree::testing {

using Rng = std::mt19937_64;

struct ExprShape {
  int max_depth = 4;
  int min_value = 2;
  int max_value = 12;
  bool division = true;
  /// `^` with small literal exponents.
  bool powers = true;
  /// Non-integer leaves such as 0.5 or 3/4.
  bool fractions = true;
};

/// Random expression over problem-number leaves N0, N1, ... in reading
/// order; `values` receives their values. May be invalid (zero divisor).
Expr random_expr(Rng& rng, const ExprShape& shape, std::vector<Rational>& values);

/// Redraws until eval_exact succeeds.
Expr random_valid_expr(Rng& rng, const ExprShape& shape, std::vector<Rational>& values);

/// One value-preserving rewrite (commutative, associative, distributive,
/// sign or division identity) at a random node. Returns the input when no
/// rule applied after a few attempts.
Expr rewrite_once(Rng& rng, const Expr& e);

/// `steps` rewrites in a row.
Expr rewrite(Rng& rng, Expr e, int steps);

/// A value-distinct variant: one leaf nudged or one operator swapped.
/// Empty when every attempt kept the value.
std::optional<Expr> perturb(Rng& rng, const Expr& e);

/// Random form-tagged MTree over a small value alphabet so that paths
/// collide often. Not necessarily canonical.
MTree random_tree(Rng& rng, int max_depth, int max_branch, int alphabet);

/// Structural mutation of a tree: drop, duplicate or alter one leaf.
MTree mutate_tree(Rng& rng, const MTree& t);

/// Brute-force multiset IoU: every root-to-leaf path spelled out as a
/// string, counts taken by linear scans.
Rational brute_force_iou(const MTree& a, const MTree& b);

std::vector<std::string> spelled_paths(const MTree& t);

}  // namespace mtree::testing
