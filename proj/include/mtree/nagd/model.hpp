#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mtree/corpus.hpp"
#include "mtree/mtree.hpp"
#include "mtree/nagd/tensor.hpp"

namespace mtree::nagd {

/// Number of sub-goal slots per goal.
inline constexpr int kSlots = 8;
inline constexpr int kOperatorCount = 4;
inline constexpr int kFormCount = 4;

/// Sinusoidal position table: p(i, 2j) = sin(i / 10000^(2j/d)),
/// p(i, 2j+1) = cos(i / 10000^(2j/d)). Throws std::invalid_argument for
/// odd d.
Matrix positional_encoding(int length, int d);

struct Hyperparameters {
  int d_model = 128;
  int heads = 4;
  int ffn = 256;
  int encoder_layers = 1;
  int depth_cap = 6;
  double focal_gamma = 2.0;
  /// Weight of the type loss against the pointer loss.
  double type_weight = 1.0;
  bool cross_goal = true;
  std::vector<Rational> constants{1, 2};
};

/// One training or decoding input: a tokenized problem with N<k>
/// placeholders and its quantity values.
struct Problem {
  std::vector<std::string> tokens;
  std::vector<std::size_t> number_positions;
  std::vector<Rational> quantities;
};

Problem to_problem(const SyntheticSample& s);
Problem to_problem(const ProblemRecord& r);

struct Example {
  Problem problem;
  MTree gold;
};

/// Vocabulary over non-number tokens, plus [CLS] and [NUM].
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& words);

  static Vocabulary build(const std::vector<Example>& examples);

  /// Throws InputError for a token outside the vocabulary.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::vector<std::string>& words() const { return words_; }
  int size() const { return static_cast<int>(words_.size()); }

  static bool is_number_token(const std::string& token);

 private:
  void add(const std::string& w);
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

struct EncoderOutput {
  Var problem;  // E_s, 1 x d
  Var numbers;  // E_V, n x d
};

/// A gold child in pseudo-order with the candidate it should select.
struct SlotTarget {
  int candidate = 0;
  std::optional<Form> form;  // leaves only
  const MTree* child = nullptr;
};

/// Candidate layout: operators (sum, product, neg_product, recip_sum),
/// constants, problem numbers, then N_b.
struct CandidateLayout {
  int constants = 0;
  int numbers = 0;
  int op(Op o) const { return static_cast<int>(o); }
  int constant(int k) const { return kOperatorCount + k; }
  int number(int k) const { return kOperatorCount + constants + k; }
  int terminator() const { return kOperatorCount + constants + numbers; }
  int size() const { return terminator() + 1; }
};

/// Orders `node`'s children operators first (by the smallest problem
/// number index in their subtree, then by operator), then constants by
/// slot, then problem numbers by index, and appends N_b when fewer than
/// kSlots children. Throws InputError for more than kSlots children or a
/// leaf that maps to no candidate.
std::vector<SlotTarget> align_targets(const MTree& node, const CandidateLayout& layout,
                                      const std::vector<Rational>& constants,
                                      const std::vector<Rational>& quantities);

/// Per-level activations returned for inspection and tests.
struct LevelOutput {
  /// Ê_p for every goal, stacked (goals * kSlots) x d, dummies excluded.
  Var slots;
  /// Pointer logits, same row layout as `slots`.
  Var logits;
};

/// Upper bound on decoded nodes; larger trees fail with size_cap.
inline constexpr std::size_t kMaxDecodedNodes = 256;

enum class DecodeFailure { terminator_first, depth_cap, size_cap, invalid_tree, eval_error };
std::string_view to_string(DecodeFailure f);

struct DecodeResult {
  std::optional<MTree> tree;
  std::optional<DecodeFailure> failure;
};

class Model {
 public:
  Model(Hyperparameters h, Vocabulary vocab, std::uint64_t seed);

  const Hyperparameters& hyper() const { return h_; }
  Hyperparameters& hyper() { return h_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter& parameter(const std::string& name);

  EncoderOutput encode(Tape& tape, const Problem& p);

  /// Candidate embeddings E_c for a problem with the given numbers.
  Var candidates(Tape& tape, Var numbers);

  /// One decomposition level. `goals` are 1 x d rows; `dummy[i]` marks
  /// leaf goals that only take part in cross-goal attention.
  LevelOutput decompose_level(Tape& tape, const std::vector<Var>& goals, const std::vector<bool>& dummy,
                              Var bank);

  /// Form logits (n x 4) for leaf slots given their Ê_p rows and the
  /// chosen candidates' embeddings.
  Var type_logits(Tape& tape, Var slot_rows, Var candidate_rows);

  /// Teacher-forced loss for one example. `post_terminator_noise` adds a
  /// fixed pattern to every slot after the gold N_b; it must not change
  /// the result.
  Var loss(Tape& tape, const Example& ex, double post_terminator_noise = 0.0);

  DecodeResult decode(const Problem& p, double post_terminator_noise = 0.0);

 private:
  struct Attention {
    Parameter* wq;
    Parameter* wk;
    Parameter* wv;
    Parameter* wo;
  };

  Parameter& add(const std::string& name, int rows, int cols, double scale);
  Var mha(Tape& tape, Var x, const Attention& a);
  Var encoder_layer(Tape& tape, Var x, int layer);

  Hyperparameters h_;
  Vocabulary vocab_;
  std::mt19937_64 rng_;
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*> by_name_;
  Matrix slot_positions_;
};

// ---------------------------------------------------------------------------
// Training

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;
};

class Adam {
 public:
  explicit Adam(OptimizerConfig c = {}) : c_(c) {}
  /// Clips the global gradient norm, steps, and zeroes the gradients.
  void step(const std::vector<Parameter*>& params);
  long steps() const { return t_; }
  void set_steps(long t) { t_ = t; }

 private:
  OptimizerConfig c_;
  long t_ = 0;
};

/// Mean teacher-forced loss over the batch, one Adam update. Throws
/// RuntimeError (with the offending example index) on a non-finite loss.
double train_step(Model& model, Adam& opt, const std::vector<const Example*>& batch);

/// Mean loss without updating anything.
double evaluate_loss(Model& model, const std::vector<const Example*>& batch);

}  // namespace mtree::nagd
