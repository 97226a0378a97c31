#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtree/mtree.hpp"

namespace mtree {

// ---------------------------------------------------------------------------
// Number extraction

struct ExtractedNumber {
  Rational value;
  /// Index of the token the number was found in.
  std::size_t position = 0;
  std::string text;
};

struct NumberExtraction {
  std::vector<ExtractedNumber> quantities;
  /// Input tokens with every number replaced by N<k>, k in reading order.
  std::vector<std::string> tokens;
};

/// Integers, decimals, percents ("30%" -> 3/10) and fractions ("1/3",
/// "(1/3)") are replaced by placeholders; everything else passes through.
/// Numbers glued to words ("of13") are split out of the token.
NumberExtraction extract_numbers(const std::vector<std::string>& tokens);

/// Whitespace tokenization.
std::vector<std::string> split_tokens(std::string_view text);

// ---------------------------------------------------------------------------
// Dataset ingestion

enum class Dialect { math23k, mawps };

enum class ExclusionReason {
  parse_error,
  unmatched_literal,
  eval_error,
  answer_mismatch,
  canon_error,
  branch_cap,
};

std::string_view to_string(ExclusionReason reason);

struct ProblemRecord {
  std::string id;
  /// Placeholder-rewritten tokens.
  std::vector<std::string> tokens;
  std::vector<ExtractedNumber> quantities;
  /// Gold equation as given, "x=" prefix removed.
  std::string equation;
  /// Gold equation with problem numbers resolved and constants tagged.
  Expr expr = lit(0);
  Rational answer;
  MTree gold = MTree::leaf(Quantity::literal(0));
};

struct Exclusion {
  std::string id;
  ExclusionReason reason;
  std::string detail;
};

struct LoadOptions {
  /// Literals that may appear in equations without a matching quantity.
  std::vector<Rational> constants{1, 2, Rational(314, 100)};
  int max_branch = 8;
  Rational tol{1, 10000};
};

struct Dataset {
  std::vector<ProblemRecord> records;
  std::vector<Exclusion> exclusions;
  std::size_t input_count = 0;
};

/// Throws InputError on an unreadable file or a schema mismatch.
Dataset load_dataset(const std::string& path, Dialect dialect, const LoadOptions& options = {});
Dataset read_dataset(std::istream& in, Dialect dialect, const LoadOptions& options = {});

Dialect parse_dialect(std::string_view name);

/// "id<TAB>reason" lines.
std::string exclusion_report(const Dataset& dataset);

/// Fraction of records whose gold branch number is below `cap`.
double branch_fraction_below(const std::vector<MTree>& trees, int cap = 8);

// ---------------------------------------------------------------------------
// Prediction files: one "id<TAB>expression" per line. Blank lines and
// lines starting with '#' are skipped; a later duplicate id wins.

std::map<std::string, std::string> read_predictions(std::istream& in);
std::map<std::string, std::string> load_predictions(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SyntheticSample {
  std::string id;
  MTree gold = MTree::leaf(Quantity::literal(0));
  /// Hint words, parentheses and N<k> placeholders.
  std::vector<std::string> tokens;
  /// Values of N0, N1, ... in reading order.
  std::vector<Rational> quantities;
  /// Token index of each N<k>.
  std::vector<std::size_t> number_positions;
  /// Infix solution over literal values, e.g. "((13*10)+(13*3))-40".
  std::string expression;
  Rational answer;
};

struct SyntheticOptions {
  std::size_t count = 100;
  std::uint64_t seed = 1;
  /// Child count -> weight. Every operator node draws its arity from it.
  std::map<int, double> branch_distribution{{2, 0.5}, {3, 0.3}, {4, 0.2}};
  /// Operator levels, root included.
  int max_depth = 3;
  /// Probability that a child below the root is itself an operator node.
  double subtree_probability = 0.3;
  int min_value = 2;
  int max_value = 20;
};

std::vector<SyntheticSample> generate_synthetic(const SyntheticOptions& options);

/// Writes samples as a JSON array in the math23k dialect.
void write_math23k(std::ostream& out, const std::vector<SyntheticSample>& samples);

}  // namespace mtree
