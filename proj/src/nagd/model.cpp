#include "mtree/nagd/model.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

namespace mtree::nagd {

Matrix positional_encoding(int length, int d) {
  if (d <= 0 || d % 2 != 0) throw std::invalid_argument("positional_encoding: d must be even");
  if (length < 0) throw std::invalid_argument("positional_encoding: negative length");
  Matrix p(length, d);
  for (int i = 0; i < length; ++i) {
    for (int j = 0; j < d / 2; ++j) {
      const double angle = i / std::pow(10000.0, 2.0 * j / d);
      p(i, 2 * j) = std::sin(angle);
      p(i, 2 * j + 1) = std::cos(angle);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Problems and vocabulary

Problem to_problem(const SyntheticSample& s) {
  return Problem{s.tokens, s.number_positions, s.quantities};
}

Problem to_problem(const ProblemRecord& r) {
  Problem p;
  p.tokens = r.tokens;
  for (const auto& q : r.quantities) {
    p.number_positions.push_back(q.position);
    p.quantities.push_back(q.value);
  }
  return p;
}

Vocabulary::Vocabulary() {
  add("[CLS]");
  add("[NUM]");
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  for (const auto& w : words) add(w);
  if (!contains("[CLS]") || !contains("[NUM]")) throw InputError("vocabulary lacks [CLS] or [NUM]");
}

void Vocabulary::add(const std::string& w) {
  if (index_.count(w)) return;
  index_[w] = static_cast<int>(words_.size());
  words_.push_back(w);
}

bool Vocabulary::is_number_token(const std::string& token) {
  return token.size() > 1 && token[0] == 'N' &&
         std::all_of(token.begin() + 1, token.end(), [](unsigned char c) { return std::isdigit(c); });
}

Vocabulary Vocabulary::build(const std::vector<Example>& examples) {
  std::set<std::string> seen;
  for (const auto& ex : examples) {
    for (const auto& t : ex.problem.tokens) {
      if (!is_number_token(t)) seen.insert(t);
    }
  }
  Vocabulary v;
  for (const auto& w : seen) v.add(w);
  return v;
}

int Vocabulary::id(const std::string& token) const {
  if (is_number_token(token)) return index_.at("[NUM]");
  auto it = index_.find(token);
  if (it == index_.end()) throw InputError("unknown token '" + token + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Target alignment

namespace {

int quantity_slot(const Quantity& q, const std::vector<Rational>& quantities) {
  const int n = static_cast<int>(quantities.size());
  if (q.origin == Origin::problem_number && q.index >= 0 && q.index < n) return q.index;
  if (q.origin == Origin::constant) return -1;
  for (int k = 0; k < n; ++k) {
    if (quantities[static_cast<std::size_t>(k)] == q.value) return k;
  }
  return -1;
}

int constant_slot(const Quantity& q, const std::vector<Rational>& constants) {
  for (std::size_t k = 0; k < constants.size(); ++k) {
    if (constants[k] == q.value) return static_cast<int>(k);
  }
  return -1;
}

int min_quantity_index(const MTree& t, const std::vector<Rational>& quantities) {
  if (t.is_leaf()) {
    const int k = quantity_slot(t.quantity(), quantities);
    return k < 0 ? INT_MAX : k;
  }
  int best = INT_MAX;
  for (const MTree& c : t.children()) best = std::min(best, min_quantity_index(c, quantities));
  return best;
}

}  // namespace

std::vector<SlotTarget> align_targets(const MTree& node, const CandidateLayout& layout,
                                      const std::vector<Rational>& constants,
                                      const std::vector<Rational>& quantities) {
  std::vector<const MTree*> children;
  if (node.is_leaf()) {
    children.push_back(&node);  // the virtual super-root's only child
  } else {
    for (const MTree& c : node.children()) children.push_back(&c);
  }
  if (children.size() > static_cast<std::size_t>(kSlots)) {
    throw InputError("node has " + std::to_string(children.size()) + " children; at most 8 fit");
  }

  struct Keyed {
    int group;
    int key;
    int tiebreak;
    SlotTarget target;
  };
  std::vector<Keyed> keyed;
  for (const MTree* c : children) {
    if (!c->is_leaf()) {
      keyed.push_back({0, min_quantity_index(*c, quantities), static_cast<int>(c->op()),
                       {layout.op(c->op()), std::nullopt, c}});
      continue;
    }
    const Form form = c->form().value_or(Form::n);
    if (const int k = quantity_slot(c->quantity(), quantities); k >= 0) {
      keyed.push_back({2, k, 0, {layout.number(k), form, c}});
    } else if (const int k2 = constant_slot(c->quantity(), constants); k2 >= 0) {
      keyed.push_back({1, k2, 0, {layout.constant(k2), form, c}});
    } else {
      throw InputError("leaf " + format_rational(c->quantity().value) + " matches no candidate");
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.group != b.group) return a.group < b.group;
    if (a.key != b.key) return a.key < b.key;
    return a.tiebreak < b.tiebreak;
  });
  std::vector<SlotTarget> out;
  for (auto& k : keyed) out.push_back(k.target);
  if (out.size() < static_cast<std::size_t>(kSlots)) out.push_back({layout.terminator(), std::nullopt, nullptr});
  return out;
}

std::string_view to_string(DecodeFailure f) {
  switch (f) {
    case DecodeFailure::terminator_first: return "terminator_first";
    case DecodeFailure::depth_cap: return "depth_cap";
    case DecodeFailure::size_cap: return "size_cap";
    case DecodeFailure::invalid_tree: return "invalid_tree";
    case DecodeFailure::eval_error: return "eval_error";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Model

Model::Model(Hyperparameters h, Vocabulary vocab, std::uint64_t seed)
    : h_(std::move(h)), vocab_(std::move(vocab)), rng_(seed) {
  const int d = h_.d_model;
  if (d <= 0 || d % 2 != 0) throw InputError("d_model must be positive and even");
  if (h_.heads <= 0 || d % h_.heads != 0) throw InputError("d_model must be divisible by heads");
  if (h_.ffn <= 0 || h_.encoder_layers < 1) throw InputError("bad ffn or encoder_layers");
  const double s = 1.0 / std::sqrt(static_cast<double>(d));

  add("embedding", vocab_.size(), d, 1.0);
  for (int l = 0; l < h_.encoder_layers; ++l) {
    const std::string p = "enc" + std::to_string(l) + ".";
    for (const char* w : {"wq", "wk", "wv", "wo"}) add(p + w, d, d, s);
    add(p + "w1", d, h_.ffn, s);
    add(p + "b1", 1, h_.ffn, 0.0);
    add(p + "w2", h_.ffn, d, 1.0 / std::sqrt(static_cast<double>(h_.ffn)));
    add(p + "b2", 1, d, 0.0);
  }
  add("operators", kOperatorCount, d, 1.0);
  if (!h_.constants.empty()) add("constants", static_cast<int>(h_.constants.size()), d, 1.0);
  add("terminator", 1, d, 1.0);
  for (const char* w : {"dec.wq", "dec.wk", "dec.wv", "dec.wo"}) add(w, d, d, s);
  add("inter.wk", d, d, s);
  add("inter.wv", d, d, s);
  add("ptr.u", 1, d, s);
  add("ptr.wp", d, d, s);
  add("ptr.wb", d, d, s);
  add("type.w1", 2 * d, d, 1.0 / std::sqrt(2.0 * d));
  add("type.b1", 1, d, 0.0);
  add("type.w2", d, kFormCount, s);
  add("type.b2", 1, kFormCount, 0.0);

  slot_positions_ = positional_encoding(kSlots, d);
}

Parameter& Model::add(const std::string& name, int rows, int cols, double scale) {
  Matrix m(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal(rng_);
  params_.push_back(std::make_unique<Parameter>(name, std::move(m)));
  by_name_[name] = params_.back().get();
  return *params_.back();
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

Parameter& Model::parameter(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw InputError("no parameter named " + name);
  return *it->second;
}

Var Model::mha(Tape& tape, Var x, const Attention& a) {
  const int d = h_.d_model;
  const int dh = d / h_.heads;
  Var q = matmul(x, tape.read(*a.wq));
  Var k = matmul(x, tape.read(*a.wk));
  Var v = matmul(x, tape.read(*a.wv));
  std::vector<Var> heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int h = 0; h < h_.heads; ++h) {
    Var qh = slice_cols(q, h * dh, dh);
    Var kh = slice_cols(k, h * dh, dh);
    Var vh = slice_cols(v, h * dh, dh);
    Var att = softmax_rows(scale * matmul(qh, transpose(kh)));
    heads.push_back(matmul(att, vh));
  }
  Var joined = h_.heads == 1 ? heads.front() : concat_cols(heads);
  return matmul(joined, tape.read(*a.wo));
}

Var Model::encoder_layer(Tape& tape, Var x, int layer) {
  const std::string p = "enc" + std::to_string(layer) + ".";
  const Attention att{&parameter(p + "wq"), &parameter(p + "wk"), &parameter(p + "wv"), &parameter(p + "wo")};
  Var h = layer_norm_rows(x + mha(tape, x, att));
  Var inner = tanh(add_row(matmul(h, tape.read(parameter(p + "w1"))), tape.read(parameter(p + "b1"))));
  Var ffn = add_row(matmul(inner, tape.read(parameter(p + "w2"))), tape.read(parameter(p + "b2")));
  return layer_norm_rows(h + ffn);
}

EncoderOutput Model::encode(Tape& tape, const Problem& p) {
  if (p.tokens.empty()) throw InputError("empty problem");
  std::vector<Eigen::Index> ids{vocab_.id("[CLS]")};
  for (const auto& t : p.tokens) ids.push_back(vocab_.id(t));
  std::vector<Eigen::Index> number_rows;
  for (std::size_t pos : p.number_positions) {
    if (pos >= p.tokens.size()) throw InputError("number position out of range");
    number_rows.push_back(static_cast<Eigen::Index>(pos) + 1);
  }
  const int len = static_cast<int>(ids.size());
  Var x = gather_rows(tape.read(parameter("embedding")), std::move(ids)) +
          tape.constant(positional_encoding(len, h_.d_model));
  for (int l = 0; l < h_.encoder_layers; ++l) x = encoder_layer(tape, x, l);
  return EncoderOutput{slice_rows(x, 0, 1), gather_rows(x, std::move(number_rows))};
}

Var Model::candidates(Tape& tape, Var numbers) {
  std::vector<Var> parts{tape.read(parameter("operators"))};
  if (!h_.constants.empty()) parts.push_back(tape.read(parameter("constants")));
  if (numbers.rows() > 0) parts.push_back(numbers);
  parts.push_back(tape.read(parameter("terminator")));
  return concat_rows(parts);
}

LevelOutput Model::decompose_level(Tape& tape, const std::vector<Var>& goals, const std::vector<bool>& dummy,
                                   Var bank) {
  if (goals.size() != dummy.size()) throw std::invalid_argument("decompose_level: one flag per goal");
  const Attention att{&parameter("dec.wq"), &parameter("dec.wk"), &parameter("dec.wv"), &parameter("dec.wo")};
  const Var positions = tape.constant(slot_positions_);

  std::vector<Var> real;
  if (h_.cross_goal) {
    std::vector<Var> all;
    for (const Var& g : goals) all.push_back(add_row(positions, g));
    Var x = all.size() == 1 ? all.front() : concat_rows(all);
    Var y = layer_norm_rows(x + mha(tape, x, att));
    for (std::size_t i = 0; i < goals.size(); ++i) {
      if (!dummy[i]) real.push_back(slice_rows(y, static_cast<Eigen::Index>(i) * kSlots, kSlots));
    }
  } else {
    for (std::size_t i = 0; i < goals.size(); ++i) {
      if (dummy[i]) continue;
      Var x = add_row(positions, goals[i]);
      real.push_back(layer_norm_rows(x + mha(tape, x, att)));
    }
  }
  if (real.empty()) throw std::invalid_argument("decompose_level: no real goals");
  Var s = real.size() == 1 ? real.front() : concat_rows(real);

  const double scale = 1.0 / std::sqrt(static_cast<double>(h_.d_model));
  Var keys = matmul(bank, tape.read(parameter("inter.wk")));
  Var values = matmul(bank, tape.read(parameter("inter.wv")));
  Var weights = softmax_rows(scale * matmul(s, transpose(keys)));
  Var slots = layer_norm_rows(s + matmul(weights, values));

  Var logits = additive_scores(matmul(slots, tape.read(parameter("ptr.wp"))),
                               matmul(bank, tape.read(parameter("ptr.wb"))), tape.read(parameter("ptr.u")));
  return LevelOutput{slots, logits};
}

Var Model::type_logits(Tape& tape, Var slot_rows, Var candidate_rows) {
  Var x = concat_cols(std::vector<Var>{slot_rows, candidate_rows});
  Var h = tanh(add_row(matmul(x, tape.read(parameter("type.w1"))), tape.read(parameter("type.b1"))));
  return add_row(matmul(h, tape.read(parameter("type.w2"))), tape.read(parameter("type.b2")));
}

namespace {

/// Deterministic perturbation rows for the masking contract.
Matrix noise_rows(Eigen::Index rows, Eigen::Index cols, const std::vector<bool>& masked, double magnitude) {
  Matrix n = Matrix::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!masked[static_cast<std::size_t>(r)]) continue;
    for (Eigen::Index c = 0; c < cols; ++c) n(r, c) = magnitude * std::sin(1.0 + 3.0 * r + 7.0 * c);
  }
  return n;
}

}  // namespace

Var Model::loss(Tape& tape, const Example& ex, double post_terminator_noise) {
  const EncoderOutput enc = encode(tape, ex.problem);
  const Var bank = candidates(tape, enc.numbers);
  const CandidateLayout layout{static_cast<int>(h_.constants.size()),
                               static_cast<int>(ex.problem.quantities.size())};

  struct Goal {
    Var vec;
    const MTree* node;  // nullptr for the virtual super-root
    bool dummy;
  };
  std::vector<Goal> level{{enc.problem, nullptr, false}};
  std::vector<Var> terms;

  while (true) {
    std::vector<Var> vecs;
    std::vector<bool> dummy;
    for (const Goal& g : level) {
      vecs.push_back(g.vec);
      dummy.push_back(g.dummy);
    }
    LevelOutput out = decompose_level(tape, vecs, dummy, bank);

    std::vector<std::vector<SlotTarget>> targets;
    for (const Goal& g : level) {
      if (g.dummy) continue;
      if (!g.node && !ex.gold.is_leaf()) {
        // Super-root: its single child is the whole tree.
        targets.push_back({{layout.op(ex.gold.op()), std::nullopt, &ex.gold},
                           {layout.terminator(), std::nullopt, nullptr}});
      } else {
        targets.push_back(align_targets(g.node ? *g.node : ex.gold, layout, h_.constants,
                                        ex.problem.quantities));
      }
    }

    if (post_terminator_noise != 0.0) {
      std::vector<bool> masked(static_cast<std::size_t>(out.slots.rows()), false);
      for (std::size_t r = 0; r < targets.size(); ++r) {
        for (int s = static_cast<int>(targets[r].size()); s < kSlots; ++s) masked[r * kSlots + s] = true;
      }
      out.slots = out.slots + tape.constant(noise_rows(out.slots.rows(), out.slots.cols(), masked, post_terminator_noise));
      out.logits = out.logits + tape.constant(noise_rows(out.logits.rows(), out.logits.cols(), masked, post_terminator_noise));
    }

    std::vector<Eigen::Index> rows, cands, leaf_rows, leaf_cands, leaf_forms;
    std::vector<Goal> next;
    for (std::size_t r = 0; r < targets.size(); ++r) {
      for (std::size_t s = 0; s < targets[r].size(); ++s) {
        const SlotTarget& t = targets[r][s];
        const auto row = static_cast<Eigen::Index>(r * kSlots + s);
        rows.push_back(row);
        cands.push_back(t.candidate);
        if (!t.child) continue;  // N_b
        if (t.form) {
          leaf_rows.push_back(row);
          leaf_cands.push_back(t.candidate);
          leaf_forms.push_back(static_cast<Eigen::Index>(*t.form));
          if (h_.cross_goal) next.push_back({slice_rows(out.slots, row, 1), t.child, true});
        } else {
          next.push_back({slice_rows(out.slots, row, 1), t.child, false});
        }
      }
    }
    terms.push_back(cross_entropy_rows(gather_rows(out.logits, rows), cands));
    if (!leaf_rows.empty()) {
      Var logits = type_logits(tape, gather_rows(out.slots, leaf_rows), gather_rows(bank, leaf_cands));
      terms.push_back(h_.type_weight * focal_loss_rows(logits, leaf_forms, h_.focal_gamma));
    }

    const bool any_real = std::any_of(next.begin(), next.end(), [](const Goal& g) { return !g.dummy; });
    if (!any_real) break;
    level = std::move(next);
  }

  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  return total;
}

namespace {

Eigen::Index argmax_row(const Matrix& m, Eigen::Index r) {
  Eigen::Index best = 0;
  m.row(r).maxCoeff(&best);
  return best;
}

}  // namespace

DecodeResult Model::decode(const Problem& p, double post_terminator_noise) {
  Tape tape;
  const EncoderOutput enc = encode(tape, p);
  const Var bank = candidates(tape, enc.numbers);
  const CandidateLayout layout{static_cast<int>(h_.constants.size()), static_cast<int>(p.quantities.size())};

  struct Node {
    bool leaf = false;
    Op op = Op::sum;
    int candidate = 0;
    Form form = Form::n;
    std::vector<std::size_t> children;
  };
  std::vector<Node> nodes;
  struct Goal {
    Var vec;
    std::size_t node;  // index in `nodes`; SIZE_MAX for the super-root
    bool dummy;
  };
  constexpr std::size_t kSuperRoot = SIZE_MAX;
  std::vector<Goal> level{{enc.problem, kSuperRoot, false}};
  auto fail = [](DecodeFailure f) { return DecodeResult{std::nullopt, f}; };

  for (int depth = 0;; ++depth) {
    if (depth > h_.depth_cap) return fail(DecodeFailure::depth_cap);
    std::vector<Var> vecs;
    std::vector<bool> dummy;
    for (const Goal& g : level) {
      vecs.push_back(g.vec);
      dummy.push_back(g.dummy);
    }
    const LevelOutput out = decompose_level(tape, vecs, dummy, bank);
    Matrix logits = out.logits.value();

    std::vector<Goal> real;
    for (const Goal& g : level) {
      if (!g.dummy) real.push_back(g);
    }
    // Slots after the first N_b are inert.
    if (post_terminator_noise != 0.0) {
      std::vector<bool> masked(static_cast<std::size_t>(logits.rows()), false);
      for (std::size_t r = 0; r < real.size(); ++r) {
        bool done = false;
        for (int s = 0; s < kSlots; ++s) {
          const auto row = static_cast<Eigen::Index>(r * kSlots + s);
          if (done) masked[static_cast<std::size_t>(row)] = true;
          if (argmax_row(logits, row) == layout.terminator()) done = true;
        }
      }
      logits += noise_rows(logits.rows(), logits.cols(), masked, post_terminator_noise);
    }

    std::vector<Goal> next;
    std::vector<Eigen::Index> leaf_rows, leaf_cands;
    std::vector<std::size_t> leaf_nodes;
    for (std::size_t r = 0; r < real.size(); ++r) {
      const bool super_root = real[r].node == kSuperRoot;
      std::vector<std::size_t> children;
      for (int s = 0; s < kSlots; ++s) {
        const auto row = static_cast<Eigen::Index>(r * kSlots + s);
        const int c = static_cast<int>(argmax_row(logits, row));
        if (c == layout.terminator()) break;
        Node child;
        child.candidate = c;
        if (c < kOperatorCount) {
          child.op = static_cast<Op>(c);
          nodes.push_back(child);
          next.push_back({slice_rows(out.slots, row, 1), nodes.size() - 1, false});
        } else {
          child.leaf = true;
          nodes.push_back(child);
          leaf_rows.push_back(row);
          leaf_cands.push_back(c);
          leaf_nodes.push_back(nodes.size() - 1);
          if (h_.cross_goal) next.push_back({slice_rows(out.slots, row, 1), nodes.size() - 1, true});
        }
        children.push_back(nodes.size() - 1);
        if (super_root) break;  // only the root token matters here
      }
      if (children.empty()) return fail(DecodeFailure::terminator_first);
      if (!super_root) nodes[real[r].node].children = std::move(children);
    }
    if (!leaf_rows.empty()) {
      const Matrix forms = type_logits(tape, gather_rows(out.slots, leaf_rows), gather_rows(bank, leaf_cands)).value();
      for (std::size_t i = 0; i < leaf_nodes.size(); ++i) {
        nodes[leaf_nodes[i]].form = static_cast<Form>(argmax_row(forms, static_cast<Eigen::Index>(i)));
      }
    }
    const bool any_real = std::any_of(next.begin(), next.end(), [](const Goal& g) { return !g.dummy; });
    if (!any_real) break;
    // An untrained model happily opens eight operators per goal.
    if (nodes.size() > kMaxDecodedNodes) return fail(DecodeFailure::size_cap);
    level = std::move(next);
  }

  // nodes[0] is the root chosen by the super-root.
  std::function<MTree(std::size_t)> build = [&](std::size_t i) -> MTree {
    const Node& n = nodes[i];
    if (n.leaf) {
      if (n.candidate < layout.number(0)) {
        const int k = n.candidate - kOperatorCount;
        return MTree::leaf(Quantity::constant(h_.constants[static_cast<std::size_t>(k)], k), n.form);
      }
      const int k = n.candidate - layout.number(0);
      return MTree::leaf(Quantity::problem(p.quantities[static_cast<std::size_t>(k)], k), n.form);
    }
    std::vector<MTree> children;
    for (std::size_t c : n.children) children.push_back(build(c));
    return MTree::node(n.op, std::move(children));
  };
  MTree tree = build(0);
  if (validate(tree)) return fail(DecodeFailure::invalid_tree);
  try {
    (void)eval_mtree(tree);
  } catch (const EvalError&) {
    return fail(DecodeFailure::eval_error);
  }
  return DecodeResult{std::move(tree), std::nullopt};
}

}  // namespace mtree::nagd
