#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "mtree/nagd/train.hpp"

namespace mtree::nagd {

void Adam::step(const std::vector<Parameter*>& params) {
  double norm2 = 0;
  for (const Parameter* p : params) norm2 += p->grad.squaredNorm();
  const double norm = std::sqrt(norm2);
  const double scale = (c_.clip_norm > 0 && norm > c_.clip_norm) ? c_.clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
  for (Parameter* p : params) {
    const Matrix g = scale * p->grad;
    p->m = c_.beta1 * p->m + (1.0 - c_.beta1) * g;
    p->v = c_.beta2 * p->v + (1.0 - c_.beta2) * g.cwiseProduct(g);
    p->value.array() -= c_.lr * (p->m.array() / bc1) / ((p->v.array() / bc2).sqrt() + c_.eps);
    p->zero_grad();
  }
}

namespace {

Var batch_loss(Tape& tape, Model& model, const std::vector<const Example*>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<Var> losses;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Var l = model.loss(tape, *batch[i]);
    if (!std::isfinite(l.item())) {
      std::ostringstream os;
      os << "non-finite loss " << l.item() << " on batch example " << i << " (gold "
         << to_prefix(batch[i]->gold) << ")";
      throw RuntimeError(os.str());
    }
    losses.push_back(l);
  }
  Var total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = total + losses[i];
  return (1.0 / static_cast<double>(batch.size())) * total;
}

}  // namespace

double train_step(Model& model, Adam& opt, const std::vector<const Example*>& batch) {
  Tape tape;
  Var loss = batch_loss(tape, model, batch);
  tape.backward(loss);
  opt.step(model.parameters());
  return loss.item();
}

double evaluate_loss(Model& model, const std::vector<const Example*>& batch) {
  Tape tape;
  return batch_loss(tape, model, batch).item();
}

// ---------------------------------------------------------------------------

Corpus build_corpus(const RunConfig& c) {
  Corpus out;
  if (c.dataset.empty()) {
    SyntheticOptions o = c.synthetic;
    o.count = c.train_count + c.test_count;
    const auto samples = generate_synthetic(o);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      Example ex{to_problem(samples[i]), samples[i].gold};
      (i < c.train_count ? out.train : out.test).push_back(std::move(ex));
    }
    return out;
  }
  LoadOptions lo;
  lo.constants = c.hyper.constants;
  const Dataset data = load_dataset(c.dataset, c.dialect, lo);
  const auto n_train = static_cast<std::size_t>(std::llround(c.train_fraction * static_cast<double>(data.records.size())));
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    Example ex{to_problem(data.records[i]), data.records[i].gold};
    (i < n_train ? out.train : out.test).push_back(std::move(ex));
  }
  return out;
}

EvalResult evaluate_model(Model& model, const std::vector<Example>& examples, const Rational& tol) {
  EvalResult out;
  for (const Example& ex : examples) {
    const DecodeResult d = model.decode(ex.problem);
    if (d.failure) ++out.decode_failures;
    out.scores.push_back(score_tree(d.tree, ex.gold, eval_mtree(ex.gold), tol));
  }
  return out;
}

TrainResult train_model(Model& model, const std::vector<Example>& train, const RunConfig& c, std::ostream* log) {
  if (train.empty()) throw InputError("no training examples");
  if (c.batch_size < 1) throw InputError("batch_size must be positive");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  Adam opt(c.optimizer);
  std::mt19937_64 rng(c.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult r;
  for (int epoch = 1; epoch <= c.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    int batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(c.batch_size)) {
      std::vector<const Example*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + static_cast<std::size_t>(c.batch_size)); ++i) {
        batch.push_back(&train[order[i]]);
      }
      total += train_step(model, opt, batch);
      ++batches;
    }
    r.epochs_run = epoch;
    r.steps = opt.steps();
    r.final_loss = total / batches;

    const bool out_of_time = c.time_budget > 0 && elapsed() > c.time_budget;
    const bool check = epoch % std::max(1, c.eval_every) == 0 || epoch == c.epochs || out_of_time;
    std::ostringstream line;
    line << "epoch=" << epoch << " step=" << r.steps << " loss=" << r.final_loss;
    if (check) {
      const EvalResult e = evaluate_model(model, train);
      r.train_value_accuracy = aggregate(e.scores).val_acc;
      line << " train_val_acc=" << r.train_value_accuracy;
    }
    line << " elapsed=" << elapsed();
    if (log) *log << line.str() << "\n" << std::flush;
    if (check && r.train_value_accuracy >= c.target_accuracy) break;
    if (out_of_time) break;
  }
  r.seconds = elapsed();
  return r;
}

}  // namespace mtree::nagd
