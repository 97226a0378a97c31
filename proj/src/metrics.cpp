#include "mtree/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mtree {

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::parse_error: return "parse_error";
    case FailureReason::canon_error: return "canon_error";
    case FailureReason::eval_error: return "eval_error";
    case FailureReason::missing_prediction: return "missing_prediction";
  }
  return "unknown";
}

Rational mtree_iou(const PathMultiset& p, const PathMultiset& g) {
  std::size_t inter = 0, uni = 0;
  auto pi = p.entries().begin();
  auto gi = g.entries().begin();
  const auto pe = p.entries().end();
  const auto ge = g.entries().end();
  while (pi != pe || gi != ge) {
    if (gi == ge || (pi != pe && compare(pi->first, gi->first) < 0)) {
      uni += pi->second;
      ++pi;
    } else if (pi == pe || compare(gi->first, pi->first) < 0) {
      uni += gi->second;
      ++gi;
    } else {
      inter += std::min(pi->second, gi->second);
      uni += std::max(pi->second, gi->second);
      ++pi;
      ++gi;
    }
  }
  if (uni == 0) return 0;
  return Rational(static_cast<long long>(inter), static_cast<long long>(uni));
}

std::string normalize_expression(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  if (out.size() >= 2 && (out[0] == 'x' || out[0] == 'X') && out[1] == '=') out.erase(0, 2);
  return out;
}

namespace {

std::vector<std::string> token_texts(std::string_view text) {
  std::vector<std::string> out;
  for (const Token& t : tokenize(text)) {
    if (t.kind != TokenKind::end) out.push_back(t.text);
  }
  return out;
}

SampleScore failed(FailureReason reason, int gold_branch) {
  SampleScore s;
  s.failure_reason = reason;
  s.gold_branch = gold_branch;
  return s;
}

bool within(const Rational& value, const Rational& target, const Rational& tol) {
  if (value == target) return true;
  const Rational diff = value - target;
  return (diff < 0 ? Rational(-diff) : diff) <= tol;
}

}  // namespace

SampleScore score_sample(std::string_view pred_text, std::string_view gold_text,
                         const Rational& gold_answer, const Rational& tol,
                         const ScoreOptions& options) {
  const std::string gold_norm = normalize_expression(gold_text);
  const Expr gold_expr = parse(gold_norm, options.parse);
  MTree gold = build_mtree(canonicalize(gold_expr));
  if (options.refmtree) gold = to_refmtree(gold);
  const int gold_branch = branch_number(gold);

  const std::string pred_norm = normalize_expression(pred_text);
  std::optional<Expr> pred_expr;
  try {
    pred_expr = parse(pred_norm, options.parse);
  } catch (const ParseError&) {
    return failed(FailureReason::parse_error, gold_branch);
  }

  Rational pred_value;
  try {
    pred_value = eval_exact(*pred_expr);
  } catch (const EvalError&) {
    return failed(FailureReason::eval_error, gold_branch);
  }

  std::optional<MTree> pred;
  try {
    pred = build_mtree(canonicalize(*pred_expr));
  } catch (const CanonError&) {
    return failed(FailureReason::canon_error, gold_branch);
  } catch (const EvalError&) {
    return failed(FailureReason::eval_error, gold_branch);
  }
  if (options.refmtree) pred = to_refmtree(*pred);

  SampleScore s;
  s.gold_branch = gold_branch;
  s.exp_acc = token_texts(pred_norm) == token_texts(gold_norm);
  s.val_acc = within(pred_value, gold_answer, tol);
  s.mtree_acc = mtree_equal(*pred, gold);
  s.mtree_iou = mtree_iou(paths(*pred), paths(gold));
  return s;
}

SampleScore score_tree(const std::optional<MTree>& prediction, const MTree& gold,
                       const Rational& gold_answer, const Rational& tol) {
  const int gold_branch = branch_number(gold);
  if (!prediction) return failed(FailureReason::parse_error, gold_branch);
  Rational value;
  try {
    value = eval_mtree(*prediction);
  } catch (const EvalError&) {
    return failed(FailureReason::eval_error, gold_branch);
  }
  SampleScore s;
  s.gold_branch = gold_branch;
  s.mtree_acc = mtree_equal(*prediction, gold);
  s.exp_acc = s.mtree_acc;
  s.val_acc = within(value, gold_answer, tol);
  s.mtree_iou = mtree_iou(paths(*prediction), paths(gold));
  return s;
}

SampleScore missing_prediction(const MTree& gold) {
  return failed(FailureReason::missing_prediction, branch_number(gold));
}

MetricReport aggregate(const std::vector<SampleScore>& scores) {
  if (scores.empty()) throw std::invalid_argument("aggregate: no samples");
  MetricReport r;
  r.samples = scores.size();
  std::size_t exp = 0, val = 0, tree = 0;
  Rational iou_total = 0;
  for (const SampleScore& s : scores) {
    exp += s.exp_acc;
    val += s.val_acc;
    tree += s.mtree_acc;
    iou_total += s.mtree_iou;
    BranchBin& bin = r.branch_bins[s.gold_branch];
    ++bin.total;
    bin.val_correct += s.val_acc;
    if (s.failure_reason) ++r.failures[*s.failure_reason];
  }
  const double n = static_cast<double>(scores.size());
  r.exp_acc = static_cast<double>(exp) / n;
  r.val_acc = static_cast<double>(val) / n;
  r.mtree_acc = static_cast<double>(tree) / n;
  r.mtree_iou = iou_total / static_cast<long long>(scores.size());
  return r;
}

namespace {

std::string percent(double fraction) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * fraction;
  return os.str();
}

}  // namespace

std::string render_table(const MetricReport& report, std::string_view label) {
  std::ostringstream os;
  const int w = 11;
  os << std::left << std::setw(14) << "model" << std::right << std::setw(9) << "samples"
     << std::setw(w) << "Exp Acc" << std::setw(w) << "Val Acc" << std::setw(w) << "MTree Acc"
     << std::setw(w) << "MTree IoU" << "\n";
  os << std::left << std::setw(14) << label << std::right << std::setw(9) << report.samples
     << std::setw(w) << percent(report.exp_acc) << std::setw(w) << percent(report.val_acc)
     << std::setw(w) << percent(report.mtree_acc) << std::setw(w)
     << percent(to_double(report.mtree_iou)) << "\n";
  os << "\nValue accuracy by gold branch number:\n";
  os << std::right << std::setw(8) << "branch" << std::setw(9) << "samples" << std::setw(w)
     << "Val Acc" << "\n";
  for (const auto& [branch, bin] : report.branch_bins) {
    os << std::setw(8) << branch << std::setw(9) << bin.total << std::setw(w)
       << percent(static_cast<double>(bin.val_correct) / static_cast<double>(bin.total)) << "\n";
  }
  if (!report.failures.empty()) {
    os << "\nPrediction failures:\n";
    for (const auto& [reason, count] : report.failures) {
      os << "  " << std::left << std::setw(20) << to_string(reason) << count << "\n";
    }
  }
  return os.str();
}

std::string render_key_values(const MetricReport& report, std::string_view prefix) {
  std::ostringstream os;
  const std::string p(prefix);
  os << std::setprecision(10);
  os << p << "samples=" << report.samples << "\n";
  os << p << "exp_acc=" << report.exp_acc << "\n";
  os << p << "val_acc=" << report.val_acc << "\n";
  os << p << "mtree_acc=" << report.mtree_acc << "\n";
  os << p << "mtree_iou=" << to_double(report.mtree_iou) << "\n";
  for (const auto& [branch, bin] : report.branch_bins) {
    os << p << "branch." << branch << ".samples=" << bin.total << "\n";
    os << p << "branch." << branch << ".val_acc="
       << static_cast<double>(bin.val_correct) / static_cast<double>(bin.total) << "\n";
  }
  for (const auto& [reason, count] : report.failures) {
    os << p << "failures." << to_string(reason) << "=" << count << "\n";
  }
  return os.str();
}

}  // namespace mtree
