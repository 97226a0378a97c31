#include <doctest.h>

#include <sstream>

#include "mtree/corpus.hpp"

using namespace mtree;

namespace {

Dataset read(const std::string& json, Dialect d = Dialect::math23k) {
  std::istringstream in(json);
  return read_dataset(in, d);
}

std::string record(const std::string& id, const std::string& text, const std::string& eq, const std::string& ans) {
  return R"({"id":")" + id + R"(","segmented_text":")" + text + R"(","equation":")" + eq + R"(","ans":")" + ans +
         "\"}";
}

}  // namespace

TEST_CASE("number extraction") {
  const auto x = extract_numbers(split_tokens("he bought 13 pens at 2.5 yuan and 25% off (1/4) of 3/5"));
  REQUIRE(x.quantities.size() == 5);
  CHECK(x.quantities[0].value == 13);
  CHECK(x.quantities[1].value == Rational(5, 2));
  CHECK(x.quantities[2].value == Rational(1, 4));
  CHECK(x.quantities[3].value == Rational(1, 4));
  CHECK(x.quantities[3].text == "(1/4)");
  CHECK(x.quantities[4].value == Rational(3, 5));
  CHECK(x.tokens[x.quantities[0].position] == "N0");
  CHECK(x.tokens[x.quantities[4].position] == "N4");
}

TEST_CASE("numbers glued to words are split out") {
  const auto x = extract_numbers({"costs12yuan", "x"});
  REQUIRE(x.quantities.size() == 1);
  CHECK(x.tokens == std::vector<std::string>{"costs", "N0", "yuan", "x"});
}

TEST_CASE("math23k records") {
  const Dataset d = read("[" + record("1", "13 boxes of 10 and 3 , minus 40", "x=13*(10+3)-40", "129") + "]");
  REQUIRE(d.records.size() == 1);
  const ProblemRecord& r = d.records[0];
  CHECK(r.id == "1");
  CHECK(r.answer == 129);
  CHECK(to_prefix(r.gold) == "+(*(13,10),*(13,3),-40)");
  CHECK(r.quantities.size() == 4);
  CHECK(d.input_count == 1);
}

TEST_CASE("literals bind to quantities first, then constants") {
  const Dataset d = read("[" + record("1", "half of 8 plus 1", "x=8/2+1", "5") + "]");
  REQUIRE(d.records.size() == 1);
  const Expr& e = d.records[0].expr;
  CHECK(e.lhs().lhs().quantity().origin == Origin::problem_number);
  CHECK(e.lhs().rhs().quantity().origin == Origin::constant);
  CHECK(e.rhs().quantity().origin == Origin::problem_number);
}

TEST_CASE("exclusions carry a reason") {
  const Dataset d = read("[" + record("a", "5 and 6", "x=5*6", "30") + "," +
                         record("b", "5 and 6", "x=5*", "30") + "," +
                         record("c", "5 and 6", "x=5*7", "35") + "," +
                         record("d", "5 and 5", "x=5/(5-5)", "0") + "," +
                         record("e", "5 and 6", "x=5*6", "31") + "," +
                         record("f", "1 2 3 4 5 6 7 8 9", "x=1+2+3+4+5+6+7+8+9", "45") + "]");
  CHECK(d.input_count == 6);
  CHECK(d.records.size() == 1);
  REQUIRE(d.exclusions.size() == 5);
  CHECK(d.exclusions[0].reason == ExclusionReason::parse_error);
  CHECK(d.exclusions[1].reason == ExclusionReason::unmatched_literal);
  CHECK(d.exclusions[2].reason == ExclusionReason::eval_error);
  CHECK(d.exclusions[3].reason == ExclusionReason::answer_mismatch);
  CHECK(d.exclusions[4].reason == ExclusionReason::branch_cap);
  const std::string report = exclusion_report(d);
  CHECK(report.find("b\tparse_error") != std::string::npos);
  CHECK(report.find("f\tbranch_cap") != std::string::npos);
}

TEST_CASE("answers") {
  // Decimal answers within tolerance, fraction answers exactly.
  CHECK(read("[" + record("1", "10 and 3", "x=10/3", "3.33333") + "]").records.size() == 1);
  CHECK(read("[" + record("1", "10 and 3", "x=10/3", "10/3") + "]").records.size() == 1);
  CHECK(read("[" + record("1", "10 and 3", "x=10/3", "3.3") + "]").records.empty());
  CHECK(read("[" + record("1", "10 and 3", "x=10/3", "abc") + "]").records.empty());
}

TEST_CASE("concatenated objects and mawps") {
  const Dataset d = read(record("1", "2 and 3", "x=2+3", "5") + "\n" + record("2", "2 and 3", "x=2*3", "6"));
  CHECK(d.records.size() == 2);
  const Dataset m =
      read(R"([{"iIndex": 7, "sQuestion": "4 birds and 5 more", "lEquations": ["X=4+5"], "lSolutions": [9]}])",
           Dialect::mawps);
  REQUIRE(m.records.size() == 1);
  CHECK(m.records[0].id == "7");
  CHECK(m.records[0].answer == 9);
  CHECK_THROWS_AS(read(R"([{"id": "1"}])"), InputError);
  CHECK_THROWS_AS(read("[{"), InputError);
  CHECK_THROWS_AS(parse_dialect("ape"), InputError);
}

TEST_CASE("fixture corpus") {
  const Dataset d = load_dataset(std::string(MTREE_TEST_DATA) + "/math23k_sample.json", Dialect::math23k);
  CHECK(d.input_count == 12);
  CHECK(d.records.size() == 9);
  CHECK(d.exclusions.size() == 3);
  std::vector<MTree> trees;
  for (const auto& r : d.records) trees.push_back(r.gold);
  CHECK(branch_fraction_below(trees, 8) == doctest::Approx(1.0));
  CHECK(branch_fraction_below(trees, 3) < 1.0);
  CHECK_THROWS_AS(load_dataset("/nonexistent.json", Dialect::math23k), InputError);
}

TEST_CASE("prediction files") {
  std::istringstream in("# comment\n\n1\t2+3\n2\t4*5\n1\t3+2\n");
  const auto p = read_predictions(in);
  CHECK(p.size() == 2);
  CHECK(p.at("1") == "3+2");
  std::istringstream bad("1 2+3\n");
  CHECK_THROWS_AS(read_predictions(bad), InputError);
}
