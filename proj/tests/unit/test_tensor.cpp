#include <doctest.h>

#include <cmath>

#include "mtree/nagd/model.hpp"

using namespace mtree::nagd;

TEST_CASE("positional encoding") {
  const Matrix p = positional_encoding(4, 8);
  CHECK(p.rows() == 4);
  CHECK(p.cols() == 8);
  CHECK(p(0, 0) == 0.0);
  CHECK(p(0, 1) == 1.0);
  CHECK(p(1, 0) == doctest::Approx(0.8414709848));
  CHECK(p(1, 1) == doctest::Approx(0.5403023059));
  CHECK(p(3, 2) == doctest::Approx(std::sin(3.0 / std::pow(10000.0, 2.0 / 8))));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 8; j += 2) CHECK(p(i, j) * p(i, j) + p(i, j + 1) * p(i, j + 1) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(positional_encoding(3, 7), std::invalid_argument);
}

TEST_CASE("softmax rows") {
  Matrix x(1, 2);
  x << 0.0, std::log(3.0);
  const Matrix s = softmax_rows_value(x);
  CHECK(s(0, 0) == doctest::Approx(0.25));
  CHECK(s(0, 1) == doctest::Approx(0.75));
  Matrix big(1, 3);
  big << 1000.0, 1000.0, 0.0;
  const Matrix t = softmax_rows_value(big);
  CHECK(t(0, 0) == doctest::Approx(0.5));
  CHECK(std::isfinite(t(0, 2)));
}

TEST_CASE("focal loss reduces to cross entropy at gamma zero") {
  Tape tape;
  Matrix z(2, 3);
  z << 0.1, 2.0, -1.0, 0.5, 0.5, 0.3;
  const Var logits = tape.constant(z);
  const double ce = cross_entropy_rows(logits, {1, 2}).item();
  const double fl = focal_loss_rows(logits, {1, 2}, 0.0).item();
  CHECK(fl == doctest::Approx(ce));
  // -log softmax summed over rows.
  const Matrix s = softmax_rows_value(z);
  CHECK(ce == doctest::Approx(-(std::log(s(0, 1)) + std::log(s(1, 2)))));
}

TEST_CASE("focal loss down-weights easy examples") {
  Tape tape;
  Matrix z(1, 2);
  z << std::log(0.9), std::log(0.1);  // p_t = 0.9 for target 0
  const double fl = focal_loss_rows(tape.constant(z), {0}, 2.0).item();
  CHECK(fl == doctest::Approx(0.01 * -std::log(0.9)).epsilon(1e-9));
  CHECK(fl == doctest::Approx(0.001054).epsilon(1e-3));
}

TEST_CASE("tape gradients of a small composite") {
  Parameter w("w", Matrix::Constant(2, 2, 0.5));
  Tape tape;
  Matrix xv(1, 2);
  xv << 1.0, -2.0;
  const Var x = tape.constant(xv);
  const Var y = sum(tanh(matmul(x, tape.read(w))));
  tape.backward(y);
  // d/dw_ij sum_j tanh(sum_i x_i w_ij) = x_i (1 - tanh^2(.)).
  const double a = std::tanh(1.0 * 0.5 - 2.0 * 0.5);
  CHECK(w.grad(0, 0) == doctest::Approx(1.0 * (1 - a * a)));
  CHECK(w.grad(1, 1) == doctest::Approx(-2.0 * (1 - a * a)));
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
}

TEST_CASE("layer norm rows have zero mean and unit variance") {
  Tape tape;
  Matrix xv(2, 4);
  xv << 1, 2, 3, 4, -5, 0, 5, 10;
  const Matrix y = layer_norm_rows(tape.constant(xv)).value();
  for (int r = 0; r < 2; ++r) {
    CHECK(y.row(r).mean() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(y.row(r).squaredNorm() / 4 == doctest::Approx(1.0).epsilon(1e-4));
  }
}
