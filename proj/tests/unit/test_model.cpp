#include <doctest.h>

#include <cmath>

#include "mtree/nagd/model.hpp"

using namespace mtree;
using namespace mtree::nagd;

namespace {

std::vector<Example> examples(std::size_t n, std::uint64_t seed = 1) {
  SyntheticOptions o;
  o.count = n;
  o.seed = seed;
  o.max_depth = 2;
  o.branch_distribution = {{2, 0.5}, {3, 0.5}};
  o.subtree_probability = 0.6;
  std::vector<Example> out;
  for (const auto& s : generate_synthetic(o)) out.push_back({to_problem(s), s.gold});
  return out;
}

Hyperparameters small(int d = 16, bool cross = true) {
  Hyperparameters h;
  h.d_model = d;
  h.heads = 2;
  h.ffn = 2 * d;
  h.cross_goal = cross;
  return h;
}

Matrix random_row(std::uint64_t seed, int d) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  Matrix m(1, d);
  for (int i = 0; i < d; ++i) m(0, i) = n(rng);
  return m;
}

}  // namespace

TEST_CASE("vocabulary") {
  const auto ex = examples(5);
  const Vocabulary v = Vocabulary::build(ex);
  CHECK(v.contains("[CLS]"));
  CHECK(v.contains("[NUM]"));
  CHECK(v.id("N0") == v.id("[NUM]"));
  CHECK(v.id("N7") == v.id("[NUM]"));
  CHECK_THROWS_AS(v.id("zebra"), InputError);
  CHECK(Vocabulary(v.words()).words() == v.words());
}

TEST_CASE("encoder shapes, order sensitivity, determinism") {
  const auto ex = examples(3);
  Model m(small(), Vocabulary::build(ex), 1);
  Tape tape;
  const auto e = m.encode(tape, ex[0].problem);
  CHECK(e.problem.rows() == 1);
  CHECK(e.problem.cols() == 16);
  CHECK(e.numbers.rows() == static_cast<Eigen::Index>(ex[0].problem.quantities.size()));

  Problem swapped = ex[0].problem;
  REQUIRE(swapped.tokens.size() >= 3);
  std::swap(swapped.tokens[0], swapped.tokens[1]);
  Tape t2;
  const auto e2 = m.encode(t2, swapped);
  CHECK((e.problem.value() - e2.problem.value()).norm() > 1e-9);

  Model again(small(), Vocabulary::build(ex), 1);
  Tape t3;
  CHECK(again.encode(t3, ex[0].problem).problem.value() == e.problem.value());
}

TEST_CASE("align_targets") {
  const std::vector<Rational> constants{1, 2};
  const std::vector<Rational> q{13, 10, 3, 40};
  const CandidateLayout layout{2, 4};
  const MTree t = build_mtree("13*(10+3)-40");
  // Children: *(13,10), *(13,3), -40. Operators first by smallest number
  // index in their subtree (both hold N0; tie broken by op), then numbers.
  const auto targets = align_targets(t, layout, constants, q);
  REQUIRE(targets.size() == 4);
  CHECK(targets[0].candidate == layout.op(Op::product));
  CHECK(targets[1].candidate == layout.op(Op::product));
  CHECK(targets[2].candidate == layout.number(3));
  CHECK(targets[2].form == Form::neg);
  CHECK(targets[3].candidate == layout.terminator());
  CHECK(targets[3].child == nullptr);

  const auto with_constant = align_targets(build_mtree("2*13"), layout, constants, q);
  REQUIRE(with_constant.size() == 3);
  CHECK(with_constant[0].candidate == layout.constant(1));
  CHECK(with_constant[1].candidate == layout.number(0));

  const auto leaf = align_targets(build_mtree("1/40"), layout, constants, q);
  REQUIRE(leaf.size() == 2);
  CHECK(leaf[0].candidate == layout.number(3));
  CHECK(leaf[0].form == Form::inv);

  CHECK_THROWS_AS(align_targets(build_mtree("7*13"), layout, constants, q), InputError);
  const std::vector<Rational> nine{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK_THROWS_AS(align_targets(build_mtree("1+2+3+4+5+6+7+8+9"), CandidateLayout{0, 9}, {}, nine),
                  InputError);
  // Eight children fill every slot; no terminator.
  const auto full = align_targets(build_mtree("1+2+3+4+5+6+7+8"), CandidateLayout{0, 9}, {}, nine);
  CHECK(full.size() == 8);
}

TEST_CASE("one goal: cross-goal attention changes nothing") {
  const auto ex = examples(2);
  const Vocabulary v = Vocabulary::build(ex);
  Model on(small(16, true), v, 3);
  Model off(small(16, false), v, 3);
  Tape a, b;
  const auto bank_a = on.candidates(a, on.encode(a, ex[0].problem).numbers);
  const auto bank_b = off.candidates(b, off.encode(b, ex[0].problem).numbers);
  const auto ya = on.decompose_level(a, {a.constant(random_row(1, 16))}, {false}, bank_a);
  const auto yb = off.decompose_level(b, {b.constant(random_row(1, 16))}, {false}, bank_b);
  CHECK(ya.slots.rows() == kSlots);
  CHECK(ya.logits.cols() == bank_a.rows());
  CHECK((ya.slots.value() - yb.slots.value()).norm() < 1e-12);
  CHECK((ya.logits.value() - yb.logits.value()).norm() < 1e-12);
}

TEST_CASE("two goals: independent without cross-goal attention, coupled with it") {
  const auto ex = examples(2);
  const Vocabulary v = Vocabulary::build(ex);
  for (bool cross : {false, true}) {
    Model m(small(16, cross), v, 3);
    auto first_goal_slots = [&](const Matrix& other) {
      Tape t;
      const auto bank = m.candidates(t, m.encode(t, ex[0].problem).numbers);
      const auto y = m.decompose_level(t, {t.constant(random_row(1, 16)), t.constant(other)}, {false, false}, bank);
      CHECK(y.slots.rows() == 2 * kSlots);
      return Matrix(y.slots.value().topRows(kSlots));
    };
    const double moved = (first_goal_slots(random_row(2, 16)) - first_goal_slots(random_row(9, 16))).norm();
    CAPTURE(cross);
    if (cross) {
      CHECK(moved > 1e-6);
    } else {
      CHECK(moved == 0.0);
    }
  }
}

TEST_CASE("dummy goals are dropped from the output") {
  const auto ex = examples(2);
  Model m(small(), Vocabulary::build(ex), 3);
  Tape t;
  const auto bank = m.candidates(t, m.encode(t, ex[0].problem).numbers);
  const auto y = m.decompose_level(t, {t.constant(random_row(1, 16)), t.constant(random_row(2, 16))},
                                   {false, true}, bank);
  CHECK(y.slots.rows() == kSlots);
  CHECK_THROWS_AS(m.decompose_level(t, {t.constant(random_row(1, 16))}, {true}, bank), std::invalid_argument);
}

TEST_CASE("analytic gradients match central differences") {
  const auto ex = examples(1, 3);
  Model m(small(8), Vocabulary::build(ex), 5);
  for (auto* p : m.parameters()) p->zero_grad();
  {
    Tape t;
    t.backward(m.loss(t, ex[0]));
  }
  std::mt19937_64 rng(1);
  double worst = 0;
  for (auto* p : m.parameters()) {
    for (int k = 0; k < 3; ++k) {
      const auto i = std::uniform_int_distribution<Eigen::Index>(0, p->value.size() - 1)(rng);
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + 1e-4;
      Tape t1;
      const double up = m.loss(t1, ex[0]).item();
      x = saved - 1e-4;
      Tape t2;
      const double down = m.loss(t2, ex[0]).item();
      x = saved;
      const double num = (up - down) / 2e-4;
      const double ana = p->grad.data()[i];
      worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loss is finite and falls under training") {
  const auto ex = examples(4, 2);
  Model m(small(16), Vocabulary::build(ex), 7);
  std::vector<const Example*> batch;
  for (const auto& e : ex) batch.push_back(&e);
  const double before = evaluate_loss(m, batch);
  CHECK(std::isfinite(before));
  Adam opt(OptimizerConfig{.lr = 0.01});
  for (int i = 0; i < 50; ++i) train_step(m, opt, batch);
  CHECK(opt.steps() == 50);
  CHECK(evaluate_loss(m, batch) < 0.5 * before);
}

TEST_CASE("noise after the terminator leaves the loss untouched") {
  const auto ex = examples(10, 4);
  Model m(small(16), Vocabulary::build(ex), 9);
  for (const auto& e : ex) {
    Tape a, b, c;
    const double clean = m.loss(a, e).item();
    CHECK(m.loss(b, e, 0.5).item() == clean);
    CHECK(m.loss(c, e, 100.0).item() == clean);
  }
}

TEST_CASE("decoding an untrained model terminates") {
  const auto ex = examples(10, 5);
  Model m(small(16), Vocabulary::build(ex), 11);
  for (const auto& e : ex) {
    const DecodeResult r = m.decode(e.problem);
    CHECK(r.tree.has_value() != r.failure.has_value());
    if (r.tree) {
      CHECK_FALSE(validate(*r.tree).has_value());
      CHECK(depth(*r.tree) <= m.hyper().depth_cap);
    }
  }
  CHECK(to_string(DecodeFailure::depth_cap) == "depth_cap");
}
