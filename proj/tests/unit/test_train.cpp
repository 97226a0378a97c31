#include <doctest.h>

#include <sstream>

#include "mtree/nagd/checkpoint.hpp"
#include "mtree/nagd/train.hpp"

using namespace mtree;
using namespace mtree::nagd;

namespace {

RunConfig config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig tiny_run() {
  return config(
      "d_model = 16\nheads = 2\nffn = 32\n"
      "train_count = 12\ntest_count = 6\nmax_depth = 2\nbranch_distribution = 2:1\n"
      "epochs = 3\nbatch_size = 4\neval_every = 1\ntarget_accuracy = 2\n");
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = config(
      "# toy\n"
      "d_model = 32   # width\n"
      "cross_goal = false\n"
      "constants = 1, 2, 3.14\n"
      "lr = 0.002\n"
      "branch_distribution = 2:0.4, 3:0.6\n"
      "dialect = mawps\n");
  CHECK(c.hyper.d_model == 32);
  CHECK_FALSE(c.hyper.cross_goal);
  CHECK(c.hyper.constants == std::vector<Rational>{1, 2, Rational(157, 50)});
  CHECK(c.optimizer.lr == doctest::Approx(0.002));
  CHECK(c.synthetic.branch_distribution.at(3) == doctest::Approx(0.6));
  CHECK(c.dialect == Dialect::mawps);
  CHECK(c.epochs == RunConfig{}.epochs);

  CHECK_THROWS_AS(config("colour = red\n"), InputError);
  CHECK_THROWS_AS(config("d_model = wide\n"), InputError);
  CHECK_THROWS_AS(config("d_model\n"), InputError);
  CHECK_THROWS_AS(config("cross_goal = maybe\n"), InputError);
  CHECK_THROWS_AS(config("branch_distribution = 2\n"), InputError);
}

TEST_CASE("rendered configs parse back") {
  RunConfig c = tiny_run();
  c.checkpoint = "model.ckpt";
  const RunConfig back = config(render_config(c));
  CHECK(render_config(back) == render_config(c));
  CHECK(back.checkpoint == "model.ckpt");
}

TEST_CASE("corpus split") {
  const Corpus corpus = build_corpus(tiny_run());
  CHECK(corpus.train.size() == 12);
  CHECK(corpus.test.size() == 6);
  CHECK_FALSE(corpus.train[0].gold == corpus.test[0].gold);
}

TEST_CASE("training runs, logs, and is deterministic") {
  const RunConfig c = tiny_run();
  const Corpus corpus = build_corpus(c);
  const Vocabulary v = Vocabulary::build(corpus.train);
  Model a(c.hyper, v, c.seed), b(c.hyper, v, c.seed);
  std::ostringstream log;
  const TrainResult ra = train_model(a, corpus.train, c, &log);
  const TrainResult rb = train_model(b, corpus.train, c);
  CHECK(ra.epochs_run == 3);
  CHECK(ra.steps == 9);
  CHECK(ra.final_loss == rb.final_loss);
  CHECK(log.str().find("epoch=") != std::string::npos);
  CHECK(log.str().find("loss=") != std::string::npos);

  const EvalResult e = evaluate_model(a, corpus.train);
  CHECK(e.scores.size() == corpus.train.size());
}

TEST_CASE("checkpoint round trip") {
  const RunConfig c = tiny_run();
  const Corpus corpus = build_corpus(c);
  Model m(c.hyper, Vocabulary::build(corpus.train), 21);
  std::stringstream io;
  save_checkpoint(m, io);
  Model back = load_checkpoint(io);
  CHECK(back.vocab().words() == m.vocab().words());
  CHECK(back.hyper().d_model == 16);
  CHECK(back.hyper().constants == m.hyper().constants);
  const auto pa = m.parameters();
  const auto pb = back.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value == pb[i]->value);
  }
  Tape t1, t2;
  CHECK(m.loss(t1, corpus.train[0]).item() == back.loss(t2, corpus.train[0]).item());

  std::stringstream bad("NOTACKPT");
  CHECK_THROWS_AS(load_checkpoint(bad), InputError);
  std::string bytes = io.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(truncated), InputError);
}
