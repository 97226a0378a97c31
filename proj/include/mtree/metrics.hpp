#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtree/mtree.hpp"

namespace mtree {

enum class FailureReason { parse_error, canon_error, eval_error, missing_prediction };

std::string_view to_string(FailureReason reason);

struct SampleScore {
  bool exp_acc = false;
  bool val_acc = false;
  bool mtree_acc = false;
  Rational mtree_iou = 0;
  std::optional<FailureReason> failure_reason;
  /// Branch number of the gold MTree, used for binning.
  int gold_branch = 1;
};

/// |P ∩ G| / |P ∪ G| with multiset semantics: per path, the intersection
/// counts min(p, g) copies and the union max(p, g).
Rational mtree_iou(const PathMultiset& p, const PathMultiset& g);

/// 1e-4, the default absolute value tolerance.
inline Rational default_tolerance() { return Rational(1, 10000); }

/// Whitespace stripped, leading "x=" dropped.
std::string normalize_expression(std::string_view text);

struct ScoreOptions {
  ParseOptions parse;
  /// Compare RefMTrees instead of form-tagged MTrees.
  bool refmtree = false;
};

/// Scores one prediction against its gold expression. Prediction-side
/// failures are recorded in failure_reason and score zero; an invalid gold
/// expression throws (it should have been rejected at ingestion).
SampleScore score_sample(std::string_view pred_text, std::string_view gold_text,
                         const Rational& gold_answer, const Rational& tol,
                         const ScoreOptions& options = {});

/// Scores an already-built prediction tree (e.g. a decoder output).
SampleScore score_tree(const std::optional<MTree>& prediction, const MTree& gold,
                       const Rational& gold_answer, const Rational& tol);

SampleScore missing_prediction(const MTree& gold);

struct BranchBin {
  std::size_t total = 0;
  std::size_t val_correct = 0;
};

struct MetricReport {
  std::size_t samples = 0;
  double exp_acc = 0;
  double val_acc = 0;
  double mtree_acc = 0;
  /// Mean of per-sample IoU, exact.
  Rational mtree_iou = 0;
  std::map<int, BranchBin> branch_bins;
  std::map<FailureReason, std::size_t> failures;
};

/// Throws std::invalid_argument on an empty list.
MetricReport aggregate(const std::vector<SampleScore>& scores);

/// Aligned text table. `label` heads the row, e.g. "cross-goal".
std::string render_table(const MetricReport& report, std::string_view label = "all");

/// "key=value" lines, one metric per line, prefixed with `prefix`.
std::string render_key_values(const MetricReport& report, std::string_view prefix = "");

}  // namespace mtree
