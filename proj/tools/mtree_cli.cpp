// mtree: canonicalize, compare and score arithmetic solution expressions;
// generate synthetic corpora; train and evaluate the toy decoder.

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mtree/corpus.hpp"
#include "mtree/metrics.hpp"
#include "mtree/mtree.hpp"
#include "mtree/nagd/checkpoint.hpp"
#include "mtree/nagd/train.hpp"

namespace {

using namespace mtree;

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

struct Globals {
  std::string tol = "0.0001";
  std::uint64_t seed = 7;
  bool seed_given = false;
  bool refmtree = false;
  bool no_cross_goal = false;
  int max_branch = 8;
  std::string out;
};

Rational tolerance(const Globals& g) {
  try {
    return parse_rational(g.tol);
  } catch (const std::exception&) {
    throw InputError("bad --tol value '" + g.tol + "'");
  }
}

/// "2:0.5,3:0.5", the config file's branch_distribution syntax.
std::map<int, double> parse_branches(const std::string& spec) {
  std::istringstream in("branch_distribution=" + spec);
  return nagd::parse_config(in).synthetic.branch_distribution;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_canonicalize(const Globals& g, const std::string& text, bool json, bool show_sum) {
  const Expr e = parse(normalize_expression(text));
  const CanonicalSum sum = canonicalize(e);
  MTree tree = build_mtree(sum);
  if (g.refmtree) tree = to_refmtree(tree);
  std::cout << (json ? to_json(tree) : to_prefix(tree)) << "\n";
  if (show_sum) std::cout << "sum " << render(sum) << "\n";
  std::cout << "value " << format_rational(eval_mtree(tree)) << "\n";
  return 0;
}

int cmd_compare(const Globals& g, const std::string& pred, const std::string& gold) {
  const Rational answer = eval_exact(parse(normalize_expression(gold)));
  ScoreOptions opts;
  opts.refmtree = g.refmtree;
  const SampleScore s = score_sample(pred, gold, answer, tolerance(g), opts);
  std::cout << "exp_acc " << (s.exp_acc ? "true" : "false") << "\n"
            << "val_acc " << (s.val_acc ? "true" : "false") << "\n"
            << "mtree_acc " << (s.mtree_acc ? "true" : "false") << "\n"
            << "mtree_iou " << format_rational(s.mtree_iou) << "\n";
  if (s.failure_reason) std::cout << "failure " << to_string(*s.failure_reason) << "\n";
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& gold_path, const std::string& pred_path,
                 const std::string& dialect, bool allow_excluded) {
  LoadOptions lo;
  lo.max_branch = g.max_branch;
  const Dataset data = load_dataset(gold_path, parse_dialect(dialect), lo);
  const auto predictions = load_predictions(pred_path);
  const Rational tol = tolerance(g);

  ScoreOptions opts;
  opts.refmtree = g.refmtree;
  std::vector<SampleScore> scores;
  std::vector<std::string> missing;
  for (const ProblemRecord& r : data.records) {
    opts.parse.number_map.clear();
    for (const auto& q : r.quantities) opts.parse.number_map.push_back(q.value);
    auto it = predictions.find(r.id);
    if (it == predictions.end()) {
      missing.push_back(r.id);
      scores.push_back(missing_prediction(g.refmtree ? to_refmtree(r.gold) : r.gold));
      continue;
    }
    scores.push_back(score_sample(it->second, r.equation, r.answer, tol, opts));
  }

  std::cout << "records " << data.input_count << ", scored " << data.records.size() << ", excluded "
            << data.exclusions.size() << "\n";
  for (const auto& e : data.exclusions) {
    std::cout << "excluded\t" << e.id << "\t" << to_string(e.reason) << "\t" << e.detail << "\n";
  }
  for (const auto& id : missing) std::cout << "missing\t" << id << "\n";
  if (scores.empty()) throw InputError("no valid gold records to score");
  const MetricReport report = aggregate(scores);
  std::cout << "\n" << render_table(report, g.refmtree ? "refmtree" : "mtree");
  if (!g.out.empty()) {
    auto out = open_output(g.out);
    out << render_key_values(report);
    out << "excluded=" << data.exclusions.size() << "\n";
    out << "missing=" << missing.size() << "\n";
  }
  if (!data.exclusions.empty() && !allow_excluded) {
    std::cerr << "mtree: " << data.exclusions.size() << " gold record(s) invalid\n";
    return kExitInput;
  }
  return 0;
}

void print_histogram(const std::string& title, const std::map<int, std::size_t>& h, std::size_t total) {
  std::cout << title << ":\n";
  for (const auto& [k, n] : h) {
    std::cout << "  " << std::setw(3) << k << std::setw(8) << n << std::setw(9) << std::fixed
              << std::setprecision(2) << 100.0 * static_cast<double>(n) / static_cast<double>(total) << "%\n";
  }
}

int cmd_stats(const Globals& g, const std::string& gold_path, const std::string& dialect, std::size_t synthetic,
              const std::string& branches, int max_depth) {
  std::vector<MTree> trees;
  if (!gold_path.empty()) {
    LoadOptions lo;
    lo.max_branch = g.max_branch;
    const Dataset data = load_dataset(gold_path, parse_dialect(dialect), lo);
    std::cout << "records " << data.input_count << ", accepted " << data.records.size() << ", excluded "
              << data.exclusions.size() << "\n";
    std::map<std::string, std::size_t> reasons;
    for (const auto& e : data.exclusions) ++reasons[std::string(to_string(e.reason))];
    for (const auto& [reason, n] : reasons) std::cout << "  " << reason << " " << n << "\n";
    if (!g.out.empty()) {
      auto out = open_output(g.out);
      out << exclusion_report(data);
    }
    for (const auto& r : data.records) trees.push_back(r.gold);
  } else {
    SyntheticOptions o;
    o.count = synthetic;
    o.seed = g.seed;
    o.max_depth = max_depth;
    if (!branches.empty()) o.branch_distribution = parse_branches(branches);
    for (const auto& s : generate_synthetic(o)) trees.push_back(s.gold);
    std::cout << "synthetic samples " << trees.size() << "\n";
  }
  if (trees.empty()) throw InputError("no trees to summarize");

  std::map<int, std::size_t> branch, depths;
  for (const MTree& t : trees) {
    ++branch[branch_number(t)];
    ++depths[depth(t)];
  }
  print_histogram("branch number", branch, trees.size());
  print_histogram("depth", depths, trees.size());
  std::cout << "fraction with branch number < " << g.max_branch << ": " << std::setprecision(4)
            << 100.0 * branch_fraction_below(trees, g.max_branch) << "%\n";
  return 0;
}

int cmd_generate(const Globals& g, std::size_t count, const std::string& branches, int max_depth) {
  if (g.out.empty()) throw InputError("generate needs --out");
  SyntheticOptions o;
  o.count = count;
  o.seed = g.seed;
  o.max_depth = max_depth;
  if (!branches.empty()) o.branch_distribution = parse_branches(branches);
  const auto samples = generate_synthetic(o);
  auto out = open_output(g.out);
  write_math23k(out, samples);
  std::cout << "wrote " << samples.size() << " samples to " << g.out << "\n";
  return 0;
}

void report_row(const std::string& label, nagd::Model& model, const std::vector<nagd::Example>& examples,
                std::ostream* kv) {
  if (examples.empty()) return;
  const auto result = nagd::evaluate_model(model, examples);
  const MetricReport report = aggregate(result.scores);
  std::cout << render_table(report, label) << "decode failures: " << result.decode_failures << "\n\n";
  if (kv) *kv << render_key_values(report, label + ".");
}

int cmd_train(const Globals& g, const std::string& config_path, bool compare) {
  nagd::RunConfig c = nagd::load_config(config_path);
  if (g.seed_given) c.seed = g.seed;
  if (g.no_cross_goal) c.hyper.cross_goal = false;
  if (!g.out.empty()) c.checkpoint = g.out;

  const nagd::Corpus corpus = nagd::build_corpus(c);
  std::vector<nagd::Example> all = corpus.train;
  all.insert(all.end(), corpus.test.begin(), corpus.test.end());
  const nagd::Vocabulary vocab = nagd::Vocabulary::build(all);
  std::cout << "train " << corpus.train.size() << ", test " << corpus.test.size() << ", vocabulary "
            << vocab.size() << "\n";

  std::ofstream log_file;
  if (!c.metrics_log.empty()) {
    log_file.open(c.metrics_log, std::ios::app);
    if (!log_file) throw InputError("cannot append to " + c.metrics_log);
  }
  std::unique_ptr<std::ofstream> kv;
  if (!c.checkpoint.empty()) kv = std::make_unique<std::ofstream>(c.checkpoint + ".metrics");

  std::vector<bool> variants{c.hyper.cross_goal};
  if (compare) variants = {true, false};
  for (bool cross : variants) {
    nagd::RunConfig rc = c;
    rc.hyper.cross_goal = cross;
    const std::string label = cross ? "cross-goal" : "vanilla";
    nagd::Model model(rc.hyper, vocab, rc.seed);
    if (log_file) log_file << "# run " << label << " seed=" << rc.seed << "\n";
    const auto r = nagd::train_model(model, corpus.train, rc, log_file ? &log_file : &std::cout);
    std::cout << label << ": " << r.epochs_run << " epochs, " << r.steps << " steps, loss " << r.final_loss
              << ", " << std::fixed << std::setprecision(1) << r.seconds << " s\n\n";
    std::cout.unsetf(std::ios::fixed);
    report_row(label + "/train", model, corpus.train, kv.get());
    report_row(label + "/test", model, corpus.test, kv.get());
    if (!c.checkpoint.empty()) {
      const std::string path = compare ? c.checkpoint + "." + label : c.checkpoint;
      nagd::save_checkpoint(model, path);
      std::cout << "saved " << path << "\n";
    }
  }
  return 0;
}

int cmd_eval_toy(const Globals& g, const std::string& config_path, const std::string& checkpoint) {
  const nagd::RunConfig c = nagd::load_config(config_path);
  nagd::Model model = nagd::load_checkpoint(checkpoint);
  if (g.no_cross_goal) model.hyper().cross_goal = false;
  const nagd::Corpus corpus = nagd::build_corpus(c);
  std::unique_ptr<std::ofstream> kv;
  if (!g.out.empty()) kv = std::make_unique<std::ofstream>(g.out);
  const std::string label = model.hyper().cross_goal ? "cross-goal" : "vanilla";
  report_row(label + "/train", model, corpus.train, kv.get());
  report_row(label + "/test", model, corpus.test, kv.get());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Canonicalize, compare and score arithmetic expressions as MTrees"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--tol", g.tol, "Absolute value tolerance")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--refmtree", g.refmtree, "Use the form-free RefMTree");
  app.add_flag("--no-cross-goal", g.no_cross_goal, "Disable cross-goal attention");
  app.add_option("--max-branch", g.max_branch, "Branch-number cap")->capture_default_str();
  app.add_option("--out", g.out, "Output path");

  std::string expr, pred, gold_expr, gold_path, pred_path, dialect = "math23k", config, checkpoint, branches;
  bool json = false, show_sum = false, allow_excluded = false, compare = false;
  std::size_t count = 100, synthetic = 0;
  int max_depth = 3;

  auto* canon = app.add_subcommand("canonicalize", "Print the MTree of an expression and its value");
  canon->add_option("expression", expr)->required();
  canon->add_flag("--json", json, "Nested-array rendering");
  canon->add_flag("--sum", show_sum, "Also print the canonical sum");
  canon->fallthrough();

  auto* cmp = app.add_subcommand("compare", "Score one prediction against one gold expression");
  cmp->add_option("prediction", pred)->required();
  cmp->add_option("gold", gold_expr)->required();
  cmp->fallthrough();

  auto* eval = app.add_subcommand("evaluate", "Score a prediction file against a dataset");
  eval->add_option("--gold", gold_path)->required();
  eval->add_option("--pred", pred_path)->required();
  eval->add_option("--dialect", dialect)->capture_default_str();
  eval->add_flag("--allow-excluded", allow_excluded, "Exit 0 even when gold records were excluded");
  eval->fallthrough();

  auto* stats = app.add_subcommand("stats", "Branch-number and depth statistics");
  stats->add_option("--gold", gold_path);
  stats->add_option("--dialect", dialect)->capture_default_str();
  stats->add_option("--synthetic", synthetic, "Summarize N generated samples instead");
  stats->add_option("--branches", branches, "Synthetic arity weights, e.g. 2:0.5,3:0.5");
  stats->add_option("--max-depth", max_depth)->capture_default_str();
  stats->fallthrough();

  auto* gen = app.add_subcommand("generate", "Write a synthetic corpus (math23k dialect)");
  gen->add_option("--count", count)->capture_default_str();
  gen->add_option("--branches", branches, "Arity weights, e.g. 2:0.5,3:0.5");
  gen->add_option("--max-depth", max_depth)->capture_default_str();
  gen->fallthrough();

  auto* train = app.add_subcommand("train", "Train the toy decoder from a config file");
  train->add_option("--config", config)->required();
  train->add_flag("--compare", compare, "Train with and without cross-goal attention");
  train->fallthrough();

  auto* evaltoy = app.add_subcommand("eval-toy", "Evaluate a checkpoint on the config's corpus");
  evaltoy->add_option("--config", config)->required();
  evaltoy->add_option("--checkpoint", checkpoint)->required();
  evaltoy->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (*canon) return cmd_canonicalize(g, expr, json, show_sum);
    if (*cmp) return cmd_compare(g, pred, gold_expr);
    if (*eval) return cmd_evaluate(g, gold_path, pred_path, dialect, allow_excluded);
    if (*stats) {
      if (gold_path.empty() && synthetic == 0) throw InputError("stats needs --gold or --synthetic");
      return cmd_stats(g, gold_path, dialect, synthetic, branches, max_depth);
    }
    if (*gen) return cmd_generate(g, count, branches, max_depth);
    if (*train) return cmd_train(g, config, compare);
    if (*evaltoy) return cmd_eval_toy(g, config, checkpoint);
  } catch (const InputError& e) {
    std::cerr << "mtree: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    std::cerr << "mtree: parse error: " << e.what() << "\n";
    return kExitInput;
  } catch (const CanonError& e) {
    std::cerr << "mtree: " << e.what() << "\n";
    return kExitInput;
  } catch (const EvalError& e) {
    std::cerr << "mtree: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "mtree: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
