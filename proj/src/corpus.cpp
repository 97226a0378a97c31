#include "mtree/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace mtree {

// ---------------------------------------------------------------------------
// Number extraction

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

namespace {

const std::regex& number_pattern() {
  static const std::regex re(R"(\(\d+/\d+\)|\d+(?:\.\d+)?%|\d+/\d+|\d+(?:\.\d+)?)");
  return re;
}

Rational number_value(const std::string& text) {
  if (text.back() == '%') return parse_decimal(text.substr(0, text.size() - 1)) / 100;
  if (text.find('/') != std::string::npos) return parse_rational(text);
  return parse_decimal(text);
}

}  // namespace

NumberExtraction extract_numbers(const std::vector<std::string>& tokens) {
  NumberExtraction out;
  for (const std::string& token : tokens) {
    auto begin = std::sregex_iterator(token.begin(), token.end(), number_pattern());
    auto end = std::sregex_iterator();
    if (begin == end) {
      out.tokens.push_back(token);
      continue;
    }
    std::size_t cursor = 0;
    for (auto it = begin; it != end; ++it) {
      const auto& m = *it;
      const auto pos = static_cast<std::size_t>(m.position());
      if (pos > cursor) out.tokens.push_back(token.substr(cursor, pos - cursor));
      const std::string text = m.str();
      const std::size_t k = out.quantities.size();
      out.quantities.push_back({number_value(text), out.tokens.size(), text});
      out.tokens.push_back("N" + std::to_string(k));
      cursor = pos + text.size();
    }
    if (cursor < token.size()) out.tokens.push_back(token.substr(cursor));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

std::string_view to_string(ExclusionReason reason) {
  switch (reason) {
    case ExclusionReason::parse_error: return "parse_error";
    case ExclusionReason::unmatched_literal: return "unmatched_literal";
    case ExclusionReason::eval_error: return "eval_error";
    case ExclusionReason::answer_mismatch: return "answer_mismatch";
    case ExclusionReason::canon_error: return "canon_error";
    case ExclusionReason::branch_cap: return "branch_cap";
  }
  return "unknown";
}

Dialect parse_dialect(std::string_view name) {
  if (name == "math23k") return Dialect::math23k;
  if (name == "mawps") return Dialect::mawps;
  throw InputError("unknown dialect: " + std::string(name));
}

namespace {

struct Answer {
  Rational value;
  /// Fraction-form answers must match exactly; decimals within tolerance.
  bool exact = false;
};

std::optional<Answer> parse_answer(std::string text) {
  text.erase(std::remove_if(text.begin(), text.end(),
                            [](unsigned char c) { return std::isspace(c); }),
             text.end());
  if (text.empty()) return std::nullopt;
  const bool fraction = text.find('/') != std::string::npos;
  try {
    if (text.back() == '%') {
      return Answer{parse_rational(text.substr(0, text.size() - 1)) / 100, false};
    }
    return Answer{parse_rational(text), fraction};
  } catch (const std::exception&) {
  }
  if (fraction) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) return std::nullopt;
    return Answer{Rational(v), false};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string strip_assignment(std::string equation) {
  equation.erase(std::remove_if(equation.begin(), equation.end(),
                                [](unsigned char c) { return std::isspace(c); }),
                 equation.end());
  if (equation.size() >= 2 && (equation[0] == 'x' || equation[0] == 'X') && equation[1] == '=') {
    equation.erase(0, 2);
  }
  return equation;
}

struct UnmatchedLiteral {
  Rational value;
};

/// Binds every literal to the first quantity of equal value, or to a
/// whitelisted constant.
Expr bind_literals(const Expr& e, const std::vector<ExtractedNumber>& quantities,
                   const std::vector<Rational>& constants) {
  switch (e.kind()) {
    case Expr::Kind::leaf: {
      const Quantity& q = e.quantity();
      if (q.origin != Origin::literal) return e;
      for (std::size_t k = 0; k < quantities.size(); ++k) {
        if (quantities[k].value == q.value) {
          return Expr::leaf(Quantity::problem(q.value, static_cast<int>(k)));
        }
      }
      for (std::size_t k = 0; k < constants.size(); ++k) {
        if (constants[k] == q.value) return Expr::leaf(Quantity::constant(q.value, static_cast<int>(k)));
      }
      throw UnmatchedLiteral{q.value};
    }
    case Expr::Kind::negate:
      return Expr::negate(bind_literals(e.operand(), quantities, constants));
    case Expr::Kind::binary:
      // Exponents stay literal: they are counts, not operands.
      if (e.op() == BinaryOp::pow) {
        return Expr::binary(e.op(), bind_literals(e.lhs(), quantities, constants), e.rhs());
      }
      return Expr::binary(e.op(), bind_literals(e.lhs(), quantities, constants),
                          bind_literals(e.rhs(), quantities, constants));
  }
  return e;
}

struct RawRecord {
  std::string id;
  std::string text;
  std::vector<std::string> equations;
  std::string answer;
};

void validate(const RawRecord& raw, const LoadOptions& options, Dataset& out) {
  auto exclude = [&](ExclusionReason reason, std::string detail) {
    out.exclusions.push_back({raw.id, reason, std::move(detail)});
  };
  if (raw.equations.size() != 1) {
    exclude(ExclusionReason::parse_error,
            std::to_string(raw.equations.size()) + " equations, expected 1");
    return;
  }

  ProblemRecord r;
  r.id = raw.id;
  NumberExtraction extraction = extract_numbers(split_tokens(raw.text));
  r.tokens = std::move(extraction.tokens);
  r.quantities = std::move(extraction.quantities);
  r.equation = strip_assignment(raw.equations.front());

  ParseOptions parse_options;
  for (const auto& q : r.quantities) parse_options.number_map.push_back(q.value);
  const auto& quantities = r.quantities;
  parse_options.accept_fraction_literal = [&quantities](const Rational& v) {
    return std::any_of(quantities.begin(), quantities.end(),
                       [&](const ExtractedNumber& q) { return q.value == v; });
  };

  try {
    r.expr = bind_literals(parse(r.equation, parse_options), r.quantities, options.constants);
  } catch (const ParseError& e) {
    exclude(ExclusionReason::parse_error, e.what());
    return;
  } catch (const UnmatchedLiteral& u) {
    exclude(ExclusionReason::unmatched_literal, format_rational(u.value));
    return;
  }

  Rational value;
  try {
    value = eval_exact(r.expr);
  } catch (const EvalError& e) {
    exclude(ExclusionReason::eval_error, e.what());
    return;
  }

  const auto answer = parse_answer(raw.answer);
  if (!answer) {
    exclude(ExclusionReason::answer_mismatch, "unreadable answer '" + raw.answer + "'");
    return;
  }
  const Rational diff = value - answer->value;
  const bool matches = answer->exact ? diff == 0 : (diff < 0 ? Rational(-diff) : diff) <= options.tol;
  if (!matches) {
    exclude(ExclusionReason::answer_mismatch,
            "equation gives " + format_rational(value) + ", answer " + raw.answer);
    return;
  }
  r.answer = answer->exact ? answer->value : value;

  try {
    r.gold = build_mtree(canonicalize(r.expr));
  } catch (const CanonError& e) {
    exclude(ExclusionReason::canon_error, e.what());
    return;
  } catch (const EvalError& e) {
    exclude(ExclusionReason::eval_error, e.what());
    return;
  }
  if (const int b = branch_number(r.gold); b > options.max_branch) {
    exclude(ExclusionReason::branch_cap, "branch number " + std::to_string(b));
    return;
  }
  out.records.push_back(std::move(r));
}

std::string json_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
  }
  throw InputError("expected a string or number, got " + v.dump());
}

const nlohmann::json& field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(std::string("record lacks field '") + key + "'");
  return *it;
}

RawRecord to_raw(const nlohmann::json& obj, Dialect dialect) {
  if (!obj.is_object()) throw InputError("record is not an object");
  RawRecord raw;
  if (dialect == Dialect::math23k) {
    raw.id = json_text(field(obj, "id"));
    // Prefer the segmented rendering when the file carries one.
    raw.text = json_text(obj.contains("segmented_text") ? obj["segmented_text"]
                                                        : field(obj, "original_text"));
    raw.equations.push_back(json_text(field(obj, "equation")));
    raw.answer = json_text(field(obj, "ans"));
  } else {
    raw.id = json_text(field(obj, "iIndex"));
    raw.text = json_text(field(obj, "sQuestion"));
    const auto& eqs = field(obj, "lEquations");
    const auto& sols = field(obj, "lSolutions");
    if (!eqs.is_array() || !sols.is_array()) throw InputError("lEquations/lSolutions must be arrays");
    for (const auto& e : eqs) raw.equations.push_back(json_text(e));
    if (!sols.empty()) raw.answer = json_text(sols.front());
  }
  return raw;
}

}  // namespace

Dataset read_dataset(std::istream& in, Dialect dialect, const LoadOptions& options) {
  std::vector<nlohmann::json> objects;
  try {
    in >> std::ws;
    if (in.peek() == '[') {
      nlohmann::json arr;
      in >> arr;
      for (auto& obj : arr) objects.push_back(std::move(obj));
    } else {
      // Concatenated objects, as in the original Math23K distribution.
      while (in >> std::ws, in.peek() != std::char_traits<char>::eof()) {
        nlohmann::json obj;
        in >> obj;
        objects.push_back(std::move(obj));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed dataset: ") + e.what());
  }

  Dataset out;
  out.input_count = objects.size();
  for (const auto& obj : objects) validate(to_raw(obj, dialect), options, out);
  return out;
}

Dataset load_dataset(const std::string& path, Dialect dialect, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  return read_dataset(in, dialect, options);
}

std::string exclusion_report(const Dataset& dataset) {
  std::string out;
  for (const auto& e : dataset.exclusions) {
    out += e.id + "\t" + std::string(to_string(e.reason)) + "\n";
  }
  return out;
}

double branch_fraction_below(const std::vector<MTree>& trees, int cap) {
  if (trees.empty()) return 0;
  const auto below = std::count_if(trees.begin(), trees.end(),
                                   [cap](const MTree& t) { return branch_number(t) < cap; });
  return static_cast<double>(below) / static_cast<double>(trees.size());
}

// ---------------------------------------------------------------------------
// Predictions

std::map<std::string, std::string> read_predictions(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError("prediction line " + std::to_string(lineno) + " has no tab");
    }
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

std::map<std::string, std::string> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  return read_predictions(in);
}

}  // namespace mtree
