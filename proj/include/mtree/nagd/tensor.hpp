#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A BasicTape records every operation; backward() replays the
// records in reverse and accumulates gradients into the Parameters that
// were read onto the tape.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mtree::nagd {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = MatrixX<double>;

/// A trainable tensor with its gradient and Adam moments.
template <typename Scalar>
struct BasicParameter {
  std::string name;
  MatrixX<Scalar> value;
  MatrixX<Scalar> grad;
  MatrixX<Scalar> m;
  MatrixX<Scalar> v;

  BasicParameter() = default;
  BasicParameter(std::string n, MatrixX<Scalar> init) : name(std::move(n)), value(std::move(init)) {
    reset_state();
  }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  void reset_state() {
    zero_grad();
    m.setZero(value.rows(), value.cols());
    v.setZero(value.rows(), value.cols());
  }
};

using Parameter = BasicParameter<double>;

template <typename Scalar>
class BasicTape;

/// Handle to a value recorded on a tape.
template <typename Scalar>
struct BasicVar {
  BasicTape<Scalar>* tape = nullptr;
  std::size_t id = 0;

  const MatrixX<Scalar>& value() const { return tape->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 result.
  Scalar item() const { return value()(0, 0); }
};

template <typename Scalar>
class BasicTape {
 public:
  using Mat = MatrixX<Scalar>;
  using Var = BasicVar<Scalar>;
  /// Receives the tape; reads grad(out) and accumulates into inputs.
  using Backward = std::function<void(BasicTape&)>;

  Var constant(Mat value) { return push(std::move(value), nullptr, nullptr); }

  /// Records the parameter's current value; backward() adds into its grad.
  Var read(BasicParameter<Scalar>& p) { return push(p.value, nullptr, &p); }

  Var push(Mat value, Backward backward, BasicParameter<Scalar>* param = nullptr) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(backward), param});
    return Var{this, nodes_.size() - 1};
  }

  const Mat& value(std::size_t id) const { return nodes_[id].value; }
  Mat& grad(std::size_t id) { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 loss and propagates.
  void backward(Var loss) {
    if (loss.tape != this || loss.rows() != 1 || loss.cols() != 1) {
      throw std::invalid_argument("backward needs a scalar on this tape");
    }
    for (std::size_t i = 0; i <= loss.id; ++i) {
      nodes_[i].grad.setZero(nodes_[i].value.rows(), nodes_[i].value.cols());
    }
    nodes_[loss.id].grad(0, 0) = Scalar(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward) n.backward(*this);
      if (n.param) n.param->grad += n.grad;
    }
  }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Backward backward;
    BasicParameter<Scalar>* param;
  };
  std::vector<Node> nodes_;
};

using Tape = BasicTape<double>;
using Var = BasicVar<double>;

// ---------------------------------------------------------------------------
// Operations. Each returns a new Var on the operands' tape.

namespace detail {
template <typename Scalar>
void same_shape(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }
}
}  // namespace detail

template <typename Scalar>
BasicVar<Scalar> matmul(BasicVar<Scalar> a, BasicVar<Scalar> b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  auto& t = *a.tape;
  MatrixX<Scalar> out = a.value() * b.value();
  const std::size_t ia = a.id, ib = b.id, io = t.size();
  return t.push(std::move(out), [ia, ib, io](BasicTape<Scalar>& t) {
    const auto& g = t.grad(io);
    t.grad(ia).noalias() += g * t.value(ib).transpose();
    t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

template <typename Scalar>
BasicVar<Scalar> operator+(BasicVar<Scalar> a, BasicVar<Scalar> b) {
  detail::same_shape(a, b, "add");
  auto& t = *a.tape;
  const std::size_t ia = a.id, ib = b.id, io = t.size();
  return t.push(a.value() + b.value(), [ia, ib, io](BasicTape<Scalar>& t) {
    t.grad(ia) += t.grad(io);
    t.grad(ib) += t.grad(io);
  });
}

template <typename Scalar>
BasicVar<Scalar> operator-(BasicVar<Scalar> a, BasicVar<Scalar> b) {
  detail::same_shape(a, b, "sub");
  auto& t = *a.tape;
  const std::size_t ia = a.id, ib = b.id, io = t.size();
  return t.push(a.value() - b.value(), [ia, ib, io](BasicTape<Scalar>& t) {
    t.grad(ia) += t.grad(io);
    t.grad(ib) -= t.grad(io);
  });
}

template <typename Scalar>
BasicVar<Scalar> operator*(Scalar s, BasicVar<Scalar> a) {
  auto& t = *a.tape;
  const std::size_t ia = a.id, io = t.size();
  return t.push(s * a.value(), [ia, io, s](BasicTape<Scalar>& t) { t.grad(ia) += s * t.grad(io); });
}

/// a (n x d) plus the 1 x d row `r` added to every row.
template <typename Scalar>
BasicVar<Scalar> add_row(BasicVar<Scalar> a, BasicVar<Scalar> r) {
  if (r.rows() != 1 || r.cols() != a.cols()) throw std::invalid_argument("add_row: shape mismatch");
  auto& t = *a.tape;
  MatrixX<Scalar> out = a.value().rowwise() + r.value().row(0);
  const std::size_t ia = a.id, ir = r.id, io = t.size();
  return t.push(std::move(out), [ia, ir, io](BasicTape<Scalar>& t) {
    t.grad(ia) += t.grad(io);
    t.grad(ir) += t.grad(io).colwise().sum();
  });
}

template <typename Scalar>
BasicVar<Scalar> tanh(BasicVar<Scalar> a) {
  auto& t = *a.tape;
  MatrixX<Scalar> out = a.value().array().tanh().matrix();
  const std::size_t ia = a.id, io = t.size();
  return t.push(std::move(out), [ia, io](BasicTape<Scalar>& t) {
    const auto& y = t.value(io);
    t.grad(ia).array() += t.grad(io).array() * (Scalar(1) - y.array().square());
  });
}

template <typename Scalar>
MatrixX<Scalar> softmax_rows_value(const MatrixX<Scalar>& x) {
  MatrixX<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar mx = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

template <typename Scalar>
BasicVar<Scalar> softmax_rows(BasicVar<Scalar> a) {
  auto& t = *a.tape;
  const std::size_t ia = a.id, io = t.size();
  return t.push(softmax_rows_value(a.value()), [ia, io](BasicTape<Scalar>& t) {
    const auto& y = t.value(io);
    const auto& g = t.grad(io);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const Scalar dot = y.row(i).dot(g.row(i));
      t.grad(ia).row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
    }
  });
}

/// Per-row standardization without a learned affine map.
template <typename Scalar>
BasicVar<Scalar> layer_norm_rows(BasicVar<Scalar> a, Scalar eps = Scalar(1e-5)) {
  auto& t = *a.tape;
  const auto& x = a.value();
  const Eigen::Index n = x.cols();
  MatrixX<Scalar> y(x.rows(), n);
  std::vector<Scalar> inv_std(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).matrix();
    const Scalar var = centered.squaredNorm() / Scalar(n);
    const Scalar s = Scalar(1) / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(i)] = s;
    y.row(i) = centered * s;
  }
  const std::size_t ia = a.id, io = t.size();
  return t.push(std::move(y), [ia, io, inv_std = std::move(inv_std)](BasicTape<Scalar>& t) {
    const auto& y = t.value(io);
    const auto& g = t.grad(io);
    const Scalar n = Scalar(y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const Scalar gm = g.row(i).mean();
      const Scalar gy = g.row(i).dot(y.row(i)) / n;
      t.grad(ia).row(i).array() +=
          inv_std[static_cast<std::size_t>(i)] * (g.row(i).array() - gm - y.row(i).array() * gy);
    }
  });
}

template <typename Scalar>
BasicVar<Scalar> transpose(BasicVar<Scalar> a) {
  auto& t = *a.tape;
  const std::size_t ia = a.id, io = t.size();
  return t.push(a.value().transpose(), [ia, io](BasicTape<Scalar>& t) {
    t.grad(ia) += t.grad(io).transpose();
  });
}

template <typename Scalar>
BasicVar<Scalar> concat_rows(const std::vector<BasicVar<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: nothing to join");
  auto& t = *parts.front().tape;
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  MatrixX<Scalar> out(rows, cols);
  std::vector<std::size_t> ids;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
    ids.push_back(p.id);
  }
  const std::size_t io = t.size();
  return t.push(std::move(out), [ids = std::move(ids), io](BasicTape<Scalar>& t) {
    Eigen::Index r = 0;
    for (std::size_t id : ids) {
      const Eigen::Index n = t.value(id).rows();
      t.grad(id) += t.grad(io).middleRows(r, n);
      r += n;
    }
  });
}

template <typename Scalar>
BasicVar<Scalar> concat_cols(const std::vector<BasicVar<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: nothing to join");
  auto& t = *parts.front().tape;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  MatrixX<Scalar> out(rows, cols);
  std::vector<std::size_t> ids;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
    ids.push_back(p.id);
  }
  const std::size_t io = t.size();
  return t.push(std::move(out), [ids = std::move(ids), io](BasicTape<Scalar>& t) {
    Eigen::Index c = 0;
    for (std::size_t id : ids) {
      const Eigen::Index n = t.value(id).cols();
      t.grad(id) += t.grad(io).middleCols(c, n);
      c += n;
    }
  });
}

template <typename Scalar>
BasicVar<Scalar> slice_rows(BasicVar<Scalar> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw std::out_of_range("slice_rows");
  auto& t = *a.tape;
  const std::size_t ia = a.id, io = t.size();
  return t.push(a.value().middleRows(start, count), [ia, io, start, count](BasicTape<Scalar>& t) {
    t.grad(ia).middleRows(start, count) += t.grad(io);
  });
}

template <typename Scalar>
BasicVar<Scalar> slice_cols(BasicVar<Scalar> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::out_of_range("slice_cols");
  auto& t = *a.tape;
  const std::size_t ia = a.id, io = t.size();
  return t.push(a.value().middleCols(start, count), [ia, io, start, count](BasicTape<Scalar>& t) {
    t.grad(ia).middleCols(start, count) += t.grad(io);
  });
}

/// Rows of `a` picked by index; repeats allowed.
template <typename Scalar>
BasicVar<Scalar> gather_rows(BasicVar<Scalar> a, std::vector<Eigen::Index> index) {
  auto& t = *a.tape;
  MatrixX<Scalar> out(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows()) throw std::out_of_range("gather_rows");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
  }
  const std::size_t ia = a.id, io = t.size();
  return t.push(std::move(out), [ia, io, index = std::move(index)](BasicTape<Scalar>& t) {
    for (std::size_t i = 0; i < index.size(); ++i) {
      t.grad(ia).row(index[i]) += t.grad(io).row(static_cast<Eigen::Index>(i));
    }
  });
}

template <typename Scalar>
BasicVar<Scalar> sum(BasicVar<Scalar> a) {
  auto& t = *a.tape;
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ia = a.id, io = t.size();
  return t.push(std::move(out), [ia, io](BasicTape<Scalar>& t) {
    t.grad(ia).array() += t.grad(io)(0, 0);
  });
}

/// Additive attention scores: out(i, j) = u . tanh(a_i + b_j), with u a
/// 1 x d row, a (n x d) and b (m x d).
template <typename Scalar>
BasicVar<Scalar> additive_scores(BasicVar<Scalar> a, BasicVar<Scalar> b, BasicVar<Scalar> u) {
  if (a.cols() != b.cols() || u.rows() != 1 || u.cols() != a.cols()) {
    throw std::invalid_argument("additive_scores: shape mismatch");
  }
  auto& t = *a.tape;
  const Eigen::Index n = a.rows(), m = b.rows();
  MatrixX<Scalar> out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      out(i, j) = (a.value().row(i) + b.value().row(j)).array().tanh().matrix().dot(u.value().row(0));
    }
  }
  const std::size_t ia = a.id, ib = b.id, iu = u.id, io = t.size();
  return t.push(std::move(out), [ia, ib, iu, io](BasicTape<Scalar>& t) {
    const auto& A = t.value(ia);
    const auto& B = t.value(ib);
    const auto& U = t.value(iu);
    const auto& g = t.grad(io);
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = 0; j < B.rows(); ++j) {
        const Scalar gij = g(i, j);
        if (gij == Scalar(0)) continue;
        const auto h = (A.row(i) + B.row(j)).array().tanh().matrix().eval();
        t.grad(iu).row(0) += gij * h;
        const auto dh = (gij * U.row(0).array() * (Scalar(1) - h.array().square())).matrix().eval();
        t.grad(ia).row(i) += dh;
        t.grad(ib).row(j) += dh;
      }
    }
  });
}

/// Sum over rows of -log softmax(logits)[target].
template <typename Scalar>
BasicVar<Scalar> cross_entropy_rows(BasicVar<Scalar> logits, std::vector<Eigen::Index> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw std::invalid_argument("cross_entropy_rows: one target per row");
  }
  auto& t = *logits.tape;
  MatrixX<Scalar> p = softmax_rows_value(logits.value());
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = Scalar(0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out(0, 0) -= std::log(p(static_cast<Eigen::Index>(i), targets[i]));
  }
  const std::size_t il = logits.id, io = t.size();
  return t.push(std::move(out), [il, io, p = std::move(p), targets = std::move(targets)](BasicTape<Scalar>& t) {
    const Scalar g = t.grad(io)(0, 0);
    MatrixX<Scalar> d = p;
    for (std::size_t i = 0; i < targets.size(); ++i) d(static_cast<Eigen::Index>(i), targets[i]) -= Scalar(1);
    t.grad(il) += g * d;
  });
}

/// Sum over rows of the focal loss -(1 - p_t)^gamma log p_t. gamma = 0 is
/// plain cross-entropy.
template <typename Scalar>
BasicVar<Scalar> focal_loss_rows(BasicVar<Scalar> logits, std::vector<Eigen::Index> targets, Scalar gamma) {
  if (gamma == Scalar(0)) return cross_entropy_rows(logits, std::move(targets));
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw std::invalid_argument("focal_loss_rows: one target per row");
  }
  auto& t = *logits.tape;
  MatrixX<Scalar> p = softmax_rows_value(logits.value());
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = Scalar(0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Scalar pt = p(static_cast<Eigen::Index>(i), targets[i]);
    out(0, 0) -= std::pow(Scalar(1) - pt, gamma) * std::log(pt);
  }
  const std::size_t il = logits.id, io = t.size();
  return t.push(std::move(out), [il, io, gamma, p = std::move(p), targets = std::move(targets)](BasicTape<Scalar>& t) {
    const Scalar g = t.grad(io)(0, 0);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const Scalar pt = p(r, targets[i]);
      const Scalar q = Scalar(1) - pt;
      // dL/dpt, then the softmax Jacobian dpt/dz_k = pt (delta_tk - p_k).
      const Scalar dl_dpt = gamma * std::pow(q, gamma - Scalar(1)) * std::log(pt) - std::pow(q, gamma) / pt;
      for (Eigen::Index k = 0; k < p.cols(); ++k) {
        const Scalar delta = k == targets[i] ? Scalar(1) : Scalar(0);
        t.grad(il)(r, k) += g * dl_dpt * pt * (delta - p(r, k));
      }
    }
  });
}

}  // namespace mtree::nagd
