#include "mtree/canon.hpp"

#include <algorithm>

namespace mtree {

// ---------------------------------------------------------------------------
// Ordering

namespace {

template <typename T>
std::strong_ordering compare_lists(const std::vector<T>& a, const std::vector<T>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = compare(a[i], b[i]); c != 0) return c;
  }
  return a.size() <=> b.size();
}

template <typename T>
void sort_canonical(std::vector<T>& items) {
  std::stable_sort(items.begin(), items.end(),
                   [](const T& a, const T& b) { return compare(a, b) < 0; });
}

}  // namespace

std::strong_ordering compare(const Factor& a, const Factor& b) {
  if (a.is_quantity() != b.is_quantity()) {
    return a.is_quantity() ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  if (a.is_quantity()) {
    // Values only: where a number came from must not steer the structure.
    if (auto c = compare(a.quantity().value, b.quantity().value); c != 0) return c;
  } else {
    if (auto c = compare(a.reciprocal(), b.reciprocal()); c != 0) return c;
  }
  return a.inverted <=> b.inverted;
}

std::strong_ordering compare(const Term& a, const Term& b) {
  if (auto c = compare_lists(a.factors, b.factors); c != 0) return c;
  return b.sign <=> a.sign;  // + before -
}

std::strong_ordering compare(const ReciprocalSum& a, const ReciprocalSum& b) {
  return compare_lists(a.terms, b.terms);
}

std::strong_ordering compare(const CanonicalSum& a, const CanonicalSum& b) {
  return compare_lists(a.terms, b.terms);
}

// ---------------------------------------------------------------------------
// Folding

namespace {

Rational fold_terms(const std::vector<Term>& terms);

Rational fold_factor(const Factor& f) {
  Rational v = f.is_quantity() ? f.quantity().value : Rational(1 / fold_terms(f.reciprocal().terms));
  if (f.inverted) v = 1 / v;
  return v;
}

Rational fold_terms(const std::vector<Term>& terms) {
  Rational total = 0;
  for (const Term& t : terms) {
    Rational product = t.sign;
    for (const Factor& f : t.factors) product *= fold_factor(f);
    total += product;
  }
  return total;
}

}  // namespace

Rational fold(const CanonicalSum& sum) { return fold_terms(sum.terms); }

// ---------------------------------------------------------------------------
// Expansion

namespace {

using Sum = std::vector<Term>;

bool is_one(const Factor& f) { return f.is_quantity() && f.quantity().value == 1; }

// Re-sorts: terms differing only in sign swap places.
Sum negated(Sum s) {
  for (Term& t : s) t.sign = -t.sign;
  sort_canonical(s);
  return s;
}

class Canonicalizer {
 public:
  explicit Canonicalizer(const CanonOptions& options) : max_terms_(options.max_terms) {}

  Sum canon(const Expr& e) {
    switch (e.kind()) {
      case Expr::Kind::leaf:
        return {Term{1, {Factor{e.quantity(), false}}}};
      case Expr::Kind::negate:
        return negated(canon(e.operand()));
      case Expr::Kind::binary:
        break;
    }
    switch (e.op()) {
      case BinaryOp::add:
        return concat(canon(e.lhs()), canon(e.rhs()));
      case BinaryOp::sub:
        return concat(canon(e.lhs()), negated(canon(e.rhs())));
      case BinaryOp::mul:
        return finalize(multiply(canon(e.lhs()), canon(e.rhs())));
      case BinaryOp::div:
        return finalize(multiply(canon(e.lhs()), inverse(canon(e.rhs()))));
      case BinaryOp::pow:
        return power(e);
    }
    return {};
  }

  Sum finalize(Sum s) {
    for (Term& t : s) t = normalize(std::move(t));
    sort_canonical(s);
    return s;
  }

 private:
  Sum concat(Sum a, const Sum& b) {
    check_size(a.size() + b.size());
    a.insert(a.end(), b.begin(), b.end());
    sort_canonical(a);
    return a;
  }

  Sum multiply(const Sum& a, const Sum& b) {
    check_size(a.size() * b.size());
    Sum out;
    out.reserve(a.size() * b.size());
    for (const Term& x : a) {
      for (const Term& y : b) {
        Term t{x.sign * y.sign, x.factors};
        t.factors.insert(t.factors.end(), y.factors.begin(), y.factors.end());
        out.push_back(std::move(t));
      }
    }
    return out;
  }

  Sum power(const Expr& e) {
    const int k = checked_exponent(e.rhs());
    const Sum base = canon(e.lhs());
    Sum out{Term{1, {}}};
    for (int i = 0; i < std::abs(k); ++i) out = multiply(out, base);
    out = finalize(std::move(out));
    // x^-k is 1/(x^k), the same thing 1/(x*x*...) produces.
    return k < 0 ? inverse(out) : out;
  }

  /// 1 / s for a finalized sum.
  Sum inverse(const Sum& s) {
    if (s.size() == 1) {
      const Term& t = s.front();
      Sum out{Term{t.sign, {}}};
      for (const Factor& f : t.factors) {
        if (!f.is_quantity()) {
          out = multiply(out, f.reciprocal().terms);
          continue;
        }
        if (!f.inverted && f.quantity().value == 0) {
          throw CanonError("zero denominator");
        }
        Factor flipped = f;
        flipped.inverted = !f.inverted;
        for (Term& o : out) o.factors.push_back(flipped);
      }
      return finalize(std::move(out));
    }
    if (fold_terms(s) == 0) throw CanonError("zero denominator");

    // Terms carrying divisors are first brought over a common denominator:
    // 1 / (sum n_i / d_i) = L / sum (n_i * L / d_i), with L the least common
    // multiple of the d_i over atomic divisors (numbers and reciprocal sums).
    std::vector<Term> numerators;
    std::vector<std::vector<Sum>> term_atoms;
    std::vector<std::pair<Sum, std::size_t>> common_atoms;  // atom, multiplicity
    for (const Term& t : s) {
      Term n{t.sign, {}};
      std::vector<Sum> atoms;
      for (const Factor& f : t.factors) {
        if (!f.is_quantity()) {
          atoms.push_back(f.reciprocal().terms);
        } else if (f.inverted) {
          if (!is_one(f)) atoms.push_back({Term{1, {Factor{f.quantity(), false}}}});
        } else {
          n.factors.push_back(f);
        }
      }
      for (const Sum& a : atoms) {
        const auto same = [&](const Sum& x) { return compare_lists(x, a) == 0; };
        const auto count = static_cast<std::size_t>(std::count_if(atoms.begin(), atoms.end(), same));
        auto it = std::find_if(common_atoms.begin(), common_atoms.end(),
                               [&](const auto& c) { return same(c.first); });
        if (it == common_atoms.end()) {
          common_atoms.emplace_back(a, count);
        } else {
          it->second = std::max(it->second, count);
        }
      }
      numerators.push_back(std::move(n));
      term_atoms.push_back(std::move(atoms));
    }
    if (common_atoms.empty()) {
      int sign = 1;
      Sum denominator = sign_normalized(s, sign);
      return {Term{sign, {Factor{ReciprocalSum{std::move(denominator)}, false}}}};
    }
    Sum common{Term{1, {}}};
    for (const auto& [atom, count] : common_atoms) {
      for (std::size_t k = 0; k < count; ++k) common = multiply(common, atom);
    }
    Sum numerator;
    for (std::size_t i = 0; i < numerators.size(); ++i) {
      Sum part{numerators[i]};
      for (const auto& [atom, count] : common_atoms) {
        const auto own = static_cast<std::size_t>(std::count_if(
            term_atoms[i].begin(), term_atoms[i].end(), [&](const Sum& x) { return compare_lists(x, atom) == 0; }));
        for (std::size_t k = own; k < count; ++k) part = multiply(part, atom);
      }
      numerator = concat(std::move(numerator), finalize(std::move(part)));
    }
    return finalize(multiply(common, inverse(finalize(std::move(numerator)))));
  }

  /// Chooses between d and -d for a reciprocal sum's contents.
  static Sum sign_normalized(Sum d, int& sign) {
    sort_canonical(d);  // the tie-break compares sorted lists
    const auto negatives = std::count_if(d.begin(), d.end(), [](const Term& t) { return t.sign < 0; });
    const auto positives = static_cast<std::ptrdiff_t>(d.size()) - negatives;
    Sum flipped = negated(d);
    bool flip = negatives > positives;
    if (negatives == positives) flip = compare_lists(flipped, d) > 0;
    sign = flip ? -1 : 1;
    return flip ? flipped : d;
  }

  /// Merges every divisor into one reciprocal sum when any sum divides the
  /// term, drops unit factors, sorts.
  Term normalize(Term t) {
    std::vector<Factor> plain, inverted_atoms, reciprocals;
    for (Factor& f : t.factors) {
      if (!f.is_quantity()) {
        reciprocals.push_back(std::move(f));
      } else if (f.inverted) {
        inverted_atoms.push_back(std::move(f));
      } else {
        plain.push_back(std::move(f));
      }
    }

    if (!reciprocals.empty() && reciprocals.size() + inverted_atoms.size() >= 2) {
      Sum d{Term{1, {}}};
      for (const Factor& f : inverted_atoms) {
        d = multiply(d, {Term{1, {Factor{f.quantity(), false}}}});
      }
      for (const Factor& f : reciprocals) d = multiply(d, f.reciprocal().terms);
      int sign = 1;
      Sum denominator = sign_normalized(finalize(std::move(d)), sign);
      t.sign *= sign;
      inverted_atoms.clear();
      reciprocals.clear();
      reciprocals.push_back(Factor{ReciprocalSum{std::move(denominator)}, false});
    }

    t.factors = std::move(plain);
    t.factors.insert(t.factors.end(), inverted_atoms.begin(), inverted_atoms.end());
    t.factors.insert(t.factors.end(), reciprocals.begin(), reciprocals.end());
    sort_canonical(t.factors);

    if (t.factors.empty()) {
      t.factors.push_back(Factor{Quantity::literal(1), false});
    } else if (t.factors.size() > 1) {
      std::vector<Factor> kept;
      for (Factor& f : t.factors) {
        if (!is_one(f)) kept.push_back(std::move(f));
      }
      if (kept.empty()) kept.push_back(std::move(t.factors.front()));
      t.factors = std::move(kept);
    }
    return t;
  }

  void check_size(std::size_t n) const {
    if (n > max_terms_) {
      throw CanonError("expansion exceeds " + std::to_string(max_terms_) + " terms");
    }
  }

  std::size_t max_terms_;
};

}  // namespace

CanonicalSum canonicalize(const Expr& e, const CanonOptions& options) {
  Canonicalizer c(options);
  return CanonicalSum{c.finalize(c.canon(e))};
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string render_terms(const std::vector<Term>& terms);

std::string render_term_body(const Term& t) {
  std::string numerator, denominator;
  for (const Factor& f : t.factors) {
    if (!f.is_quantity()) {
      denominator += "/(" + render_terms(f.reciprocal().terms) + ")";
    } else if (f.inverted) {
      denominator += "/" + format_rational(f.quantity().value);
    } else {
      if (!numerator.empty()) numerator += "*";
      numerator += format_rational(f.quantity().value);
    }
  }
  if (numerator.empty()) numerator = "1";
  return numerator + denominator;
}

std::string render_terms(const std::vector<Term>& terms) {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Term& t = terms[i];
    if (i == 0) {
      if (t.sign < 0) out += "-";
    } else {
      out += t.sign < 0 ? " - " : " + ";
    }
    out += render_term_body(t);
  }
  return out;
}

}  // namespace

std::string render(const CanonicalSum& sum) { return render_terms(sum.terms); }

}  // namespace mtree
