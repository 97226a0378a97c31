#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "mtree/expr.hpp"

namespace mtree {

struct Term;

/// 1 / (t1 + t2 + ...). Always holds at least two terms; single-term
/// divisors are inverted factor by factor instead.
struct ReciprocalSum {
  std::vector<Term> terms;
};

struct Factor {
  std::variant<Quantity, ReciprocalSum> base;
  bool inverted = false;

  bool is_quantity() const { return base.index() == 0; }
  const Quantity& quantity() const { return std::get<Quantity>(base); }
  const ReciprocalSum& reciprocal() const { return std::get<ReciprocalSum>(base); }
};

/// Signed product. The sign lives here and nowhere else; a term holds at
/// most one ReciprocalSum factor.
struct Term {
  int sign = 1;
  std::vector<Factor> factors;
};

/// Fully expanded sum of signed products. Terms and factors are sorted by
/// the canonical order below; like terms are never merged.
struct CanonicalSum {
  std::vector<Term> terms;
};

// Canonical order: quantities before reciprocal sums; quantities by
// (value, inverted); reciprocal sums lexicographically by their terms;
// terms by their factor lists, then + before -. A quantity's origin is
// carried but never compared, so N0 = 4 and a literal 4 are the same factor.
std::strong_ordering compare(const Factor& a, const Factor& b);
std::strong_ordering compare(const Term& a, const Term& b);
std::strong_ordering compare(const ReciprocalSum& a, const ReciprocalSum& b);
std::strong_ordering compare(const CanonicalSum& a, const CanonicalSum& b);

inline bool operator==(const Factor& a, const Factor& b) { return compare(a, b) == 0; }
inline bool operator==(const Term& a, const Term& b) { return compare(a, b) == 0; }
inline bool operator==(const ReciprocalSum& a, const ReciprocalSum& b) { return compare(a, b) == 0; }
inline bool operator==(const CanonicalSum& a, const CanonicalSum& b) { return compare(a, b) == 0; }

inline constexpr std::size_t kMaxExpansionTerms = 4096;

struct CanonOptions {
  std::size_t max_terms = kMaxExpansionTerms;
};

/// Removes brackets: distributes products over sums, turns subtraction into
/// negated terms and division into inverted factors or reciprocal sums,
/// unrolls integer powers. Constants are never folded.
///
/// All reciprocal parts of one term share a single denominator: when a term
/// divides by a sum, every divisor of that term is multiplied into that sum,
/// so a/(b*(c+d)), a/b/(c+d) and a/(b*c+b*d) agree. A reciprocal sum is
/// sign-normalized so that its positive terms are the majority (ties go to
/// the lexicographically larger of the two sign choices), the displaced sign
/// moving to the enclosing term. A sum whose terms carry divisors is put
/// over a common denominator (the least common multiple of its terms'
/// divisors, counted over numbers and reciprocal sums) before it is
/// inverted, so 1/((a+b)/c) and c/(a+b) agree.
///
/// Throws CanonError on a zero denominator or when the expansion exceeds
/// `max_terms`; exponent errors surface as EvalError.
CanonicalSum canonicalize(const Expr& e, const CanonOptions& options = {});

/// Exact value of the canonical form.
Rational fold(const CanonicalSum& sum);

/// Infix text that re-parses to the same canonical form, e.g.
/// "3*13 + 10*13 - 40" or "2/(3 + 4)".
std::string render(const CanonicalSum& sum);

}  // namespace mtree
