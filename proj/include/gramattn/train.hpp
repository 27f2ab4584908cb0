// Copyright 2026 The gramattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gramattn/model.hpp"

namespace gramattn {

struct TrainConfig {
  std::size_t epochs = 3;
  // Training starts from random init. At 1e-3 the small encoder collapses
  // onto the majority class.
  double learning_rate = 3e-4;
  std::size_t batch_size = 8;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  // Fail the run if a hard-masked forward pass leaks probability mass.
  bool check_leakage = false;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  std::uint64_t step = 0;
};

/// One AdamW update at 1-based `step`: decoupled decay, then the
/// bias-corrected adaptive step.
template <typename T>
void adamw_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
                const TrainConfig& cfg, std::uint64_t step);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  std::size_t samples = 0;
  double accuracy = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
  std::vector<ClassScores> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
};

/// Classes with no support or no predictions score 0 for the undefined ratio.
Metrics compute_metrics(std::span<const int> predicted, std::span<const int> gold,
                        std::size_t num_classes);

struct Example {
  TokenizedSequence sequence;
  int label = 0;
};

struct Corpus {
  std::vector<Example> examples;
  std::size_t skipped = 0;
  std::vector<std::string> errors;
};

/// Baseline-tags, tokenizes and aligns each sentence.
Corpus encode_dataset(const std::vector<LabeledExample>& data, const Vocab& vocab,
                      const Lexicon& lexicon, std::size_t max_len);

Metrics evaluate(const Model<float>& model, std::span<const Example> data, const RuleSet& rs);

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double first_batch_loss = 0.0;
  double last_batch_loss = 0.0;
  Metrics dev;
};

struct Checkpoint {
  ModelConfig model_config;
  TrainConfig train_config;
  Model<float> model;
  AdamState adam;
  std::size_t epochs_done = 0;
  std::string rng_state;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Single-run training state: model, optimizer moments and shuffle RNG.
class Trainer {
 public:
  Trainer(const ModelConfig& mcfg, const TrainConfig& tcfg, RuleSet rules);
  explicit Trainer(const Checkpoint& ck, RuleSet rules);

  /// Throws Error(kNumeric) naming the step when the loss is not finite.
  EpochRecord run_epoch(std::span<const Example> train, std::span<const Example> dev);

  /// One optimizer step on `batch`; returns its loss.
  double train_step(std::span<const Example> batch);

  Checkpoint checkpoint() const;
  const Model<float>& model() const { return model_; }
  std::size_t epochs_done() const { return epochs_done_; }
  std::uint64_t steps() const { return adam_.step; }

 private:
  TrainConfig tcfg_;
  RuleSet rules_;
  Model<float> model_;
  AdamState adam_;
  std::mt19937_64 rng_;
  std::size_t epochs_done_ = 0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  Checkpoint checkpoint;
};

/// Runs the remaining epochs up to tcfg.epochs.
TrainResult train(const ModelConfig& mcfg, const TrainConfig& tcfg, const RuleSet& rs,
                  std::span<const Example> train_set, std::span<const Example> dev_set);

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history);

}  // namespace gramattn
