#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtree/corpus.hpp"
#include "mtree/metrics.hpp"
#include "mtree/nagd/model.hpp"

namespace mtree::nagd {

/// Everything a toy training or evaluation run needs. Read from a plain
/// "key = value" file; see docs/formats.md for the keys.
struct RunConfig {
  Hyperparameters hyper;
  OptimizerConfig optimizer;
  std::uint64_t seed = 7;

  int epochs = 300;
  int batch_size = 8;
  /// Stop once training-set value accuracy reaches this (checked every
  /// eval_every epochs). Values above 1 disable early stopping.
  double target_accuracy = 1.0;
  int eval_every = 10;
  /// Wall-clock cap in seconds; 0 means none.
  double time_budget = 0;

  /// Synthetic corpus; ignored when `dataset` is set.
  SyntheticOptions synthetic;
  std::size_t train_count = 200;
  std::size_t test_count = 0;

  /// Optional ingested corpus, split train/test by `train_fraction`.
  std::string dataset;
  Dialect dialect = Dialect::math23k;
  double train_fraction = 0.8;

  std::string checkpoint;
  std::string metrics_log;
};

/// Throws InputError on unknown keys or malformed values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
std::string render_config(const RunConfig& c);

struct Corpus {
  std::vector<Example> train;
  std::vector<Example> test;
};

/// Builds the train/test examples named by the config. Synthetic test
/// samples come from the same generator, continuing after the training
/// samples.
Corpus build_corpus(const RunConfig& c);

struct EvalResult {
  std::vector<SampleScore> scores;
  std::size_t decode_failures = 0;
};

EvalResult evaluate_model(Model& model, const std::vector<Example>& examples,
                          const Rational& tol = default_tolerance());

struct TrainResult {
  int epochs_run = 0;
  long steps = 0;
  double final_loss = 0;
  double train_value_accuracy = 0;
  double seconds = 0;
};

/// Trains in place. Progress lines ("epoch=.. loss=.. ...") are appended
/// to `log` when given. Deterministic for a fixed config.
TrainResult train_model(Model& model, const std::vector<Example>& train, const RunConfig& c,
                        std::ostream* log = nullptr);

}  // namespace mtree::nagd
