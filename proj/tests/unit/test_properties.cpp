#include <doctest.h>

#include "generators.hpp"
#include "mtree/metrics.hpp"

using namespace mtree;

// Smaller versions of the acceptance sweeps, quick enough for every build.

TEST_CASE("rewritten expressions unify") {
  testing::Rng rng(41);
  testing::ExprShape shape;
  shape.max_depth = 3;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_valid_expr(rng, shape, values);
    const Expr r = testing::rewrite(rng, e, 4);
    CAPTURE(print(e));
    CAPTURE(print(r));
    REQUIRE(eval_exact(r) == eval_exact(e));
    CHECK(mtree_equal(build_mtree(canonicalize(e)), build_mtree(canonicalize(r))));
  }
}

TEST_CASE("value-distinct expressions never unify") {
  testing::Rng rng(42);
  testing::ExprShape shape;
  shape.max_depth = 3;
  for (int i = 0; i < 500; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_valid_expr(rng, shape, values);
    if (auto c = testing::perturb(rng, e)) {
      CHECK_FALSE(mtree_equal(build_mtree(canonicalize(e)), build_mtree(canonicalize(*c))));
    }
  }
}

TEST_CASE("RefMTree keeps the value") {
  testing::Rng rng(43);
  testing::ExprShape shape;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_valid_expr(rng, shape, values);
    const MTree t = build_mtree(canonicalize(e));
    CHECK(eval_mtree(t) == eval_exact(e));
    CHECK(eval_mtree(to_refmtree(t)) == eval_mtree(t));
  }
}

TEST_CASE("metric implications") {
  testing::Rng rng(44);
  testing::ExprShape shape;
  shape.max_depth = 3;
  for (int i = 0; i < 300; ++i) {
    std::vector<Rational> values;
    const Expr e = testing::random_valid_expr(rng, shape, values);
    ScoreOptions o;
    o.parse.number_map = values;
    const std::string gold = print(e);
    for (const std::string& pred : {gold, print(testing::rewrite(rng, e, 2))}) {
      const SampleScore s = score_sample(pred, gold, eval_exact(e), default_tolerance(), o);
      CHECK((!s.exp_acc || s.mtree_acc));
      CHECK((!s.mtree_acc || s.val_acc));
      CHECK((!s.mtree_acc || s.mtree_iou == 1));
    }
  }
}
