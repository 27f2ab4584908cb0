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

#include "gramattn/train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gramattn/error.hpp"
#include "json.hpp"

namespace gramattn {
namespace {

using nlohmann::json;

constexpr char kCheckpointMagic[8] = {'G', 'A', 'C', 'K', 'P', 'T', '0', '1'};
constexpr double kLeakageTolerance = 1e-6;

json model_config_json(const ModelConfig& c) {
  return {{"num_layers", c.num_layers}, {"hidden", c.hidden},         {"num_heads", c.num_heads},
          {"ffn_dim", c.ffn_dim},       {"vocab_size", c.vocab_size}, {"max_len", c.max_len},
          {"num_classes", c.num_classes}, {"strategy", strategy_name(c.strategy)}};
}

ModelConfig model_config_from(const json& j) {
  ModelConfig c;
  c.num_layers = j.at("num_layers");
  c.hidden = j.at("hidden");
  c.num_heads = j.at("num_heads");
  c.ffn_dim = j.at("ffn_dim");
  c.vocab_size = j.at("vocab_size");
  c.max_len = j.at("max_len");
  c.num_classes = j.at("num_classes");
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  return c;
}

json train_config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},       {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size}, {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},         {"beta2", c.beta2},
          {"epsilon", c.epsilon},     {"seed", c.seed},
          {"threads", c.threads},     {"check_leakage", c.check_leakage}};
}

TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs");
  c.learning_rate = j.at("learning_rate");
  c.batch_size = j.at("batch_size");
  c.weight_decay = j.at("weight_decay");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.epsilon = j.at("epsilon");
  c.seed = j.at("seed");
  c.threads = j.at("threads");
  c.check_leakage = j.at("check_leakage");
  return c;
}

int argmax(std::span<const float> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0) || threads < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "train config requires epochs >= 1, batch_size >= 1, learning_rate > 0, threads >= 1");
  }
  if (weight_decay < 0.0 || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 ||
      !(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid AdamW hyperparameters");
  }
}

template <typename T>
void adamw_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
                const TrainConfig& cfg, std::uint64_t step) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw Error(ErrorCode::kShape, "adamw_step buffer size mismatch");
  }
  if (step < 1) throw Error(ErrorCode::kInvalidArgument, "adamw step counter starts at 1");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const T lr = static_cast<T>(cfg.learning_rate);
  const T decay = static_cast<T>(1.0 - cfg.learning_rate * cfg.weight_decay);
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T eps = static_cast<T>(cfg.epsilon);
  const T inv_bc1 = static_cast<T>(1.0 / bc1), inv_bc2 = static_cast<T>(1.0 / bc2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    m[i] = b1 * m[i] + (T(1) - b1) * g;
    v[i] = b2 * v[i] + (T(1) - b2) * g * g;
    const T mhat = m[i] * inv_bc1;
    const T vhat = v[i] * inv_bc2;
    params[i] *= decay;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template void adamw_step<float>(std::span<float>, std::span<const float>, std::span<float>,
                                std::span<float>, const TrainConfig&, std::uint64_t);
template void adamw_step<double>(std::span<double>, std::span<const double>, std::span<double>,
                                 std::span<double>, const TrainConfig&, std::uint64_t);

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> gold,
                        std::size_t num_classes) {
  if (predicted.size() != gold.size()) throw Error(ErrorCode::kShape, "prediction/gold size mismatch");
  if (gold.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot score an empty dataset");
  Metrics m;
  m.samples = gold.size();
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(gold[i]) >= num_classes ||
        static_cast<std::size_t>(predicted[i]) >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "class index out of range");
    }
    ++m.confusion[gold[i]][predicted[i]];
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < num_classes; ++c) correct += m.confusion[c][c];
  const auto n = static_cast<double>(gold.size());
  m.accuracy = static_cast<double>(correct) / n;

  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t tp = m.confusion[c][c], pred = 0, support = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      pred += m.confusion[k][c];
      support += m.confusion[c][k];
    }
    ClassScores s;
    s.support = support;
    s.precision = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    s.recall = support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    m.per_class.push_back(s);
    const double k = static_cast<double>(num_classes);
    m.macro_precision += s.precision / k;
    m.macro_recall += s.recall / k;
    m.macro_f1 += s.f1 / k;
    const double w = static_cast<double>(support) / n;
    m.weighted_precision += w * s.precision;
    m.weighted_recall += w * s.recall;
    m.weighted_f1 += w * s.f1;
  }
  return m;
}

Corpus encode_dataset(const std::vector<LabeledExample>& data, const Vocab& vocab,
                      const Lexicon& lexicon, std::size_t max_len) {
  Corpus c;
  c.examples.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      auto tagged = tag_sentence(lexicon, data[i].sentence);
      c.examples.push_back({encode_sequence(vocab, tagged, max_len), data[i].label});
    } catch (const Error& e) {
      ++c.skipped;
      c.errors.push_back("sentence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return c;
}

Metrics evaluate(const Model<float>& model, std::span<const Example> data, const RuleSet& rs) {
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot evaluate an empty dataset");
  std::vector<int> pred, gold;
  pred.reserve(data.size());
  gold.reserve(data.size());
  for (const auto& ex : data) {
    auto logits = forward_sequence(model, ex.sequence, rs, ForwardOptions{}, nullptr);
    pred.push_back(argmax(logits));
    gold.push_back(ex.label);
  }
  return compute_metrics(pred, gold, model.config.num_classes);
}

void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  const auto& layout = ck.model.layout;
  json manifest = json::array();
  std::size_t offset = 0;
  for (const char* prefix : {"", "adam.m.", "adam.v."}) {
    for (const auto& t : layout.tensors) {
      manifest.push_back({{"name", std::string(prefix) + t.name},
                          {"shape", t.shape},
                          {"offset", offset}});
      offset += t.size * sizeof(float);
    }
  }
  json header = {{"format", "gramattn-checkpoint"},
                 {"version", 1},
                 {"model_config", model_config_json(ck.model_config)},
                 {"train_config", train_config_json(ck.train_config)},
                 {"epochs_done", ck.epochs_done},
                 {"step", ck.adam.step},
                 {"rng_state", ck.rng_state},
                 {"blob_bytes", offset},
                 {"manifest", manifest}};
  const std::string text = header.dump();
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  const std::uint64_t len = text.size();
  os.write(reinterpret_cast<const char*>(&len), sizeof len);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  auto blob = [&](const std::vector<float>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  };
  blob(ck.model.params);
  blob(ck.adam.m);
  blob(ck.adam.v);
  if (!os) throw Error(ErrorCode::kIo, "failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw Error(ErrorCode::kParse, "not a gramattn checkpoint");
  }
  std::uint64_t len = 0;
  if (!is.read(reinterpret_cast<char*>(&len), sizeof len) || len > (1u << 30)) {
    throw Error(ErrorCode::kParse, "corrupt checkpoint header");
  }
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) {
    throw Error(ErrorCode::kParse, "truncated checkpoint header");
  }
  Checkpoint ck;
  try {
    const json header = json::parse(text);
    ck.model_config = model_config_from(header.at("model_config"));
    ck.train_config = train_config_from(header.at("train_config"));
    ck.epochs_done = header.at("epochs_done");
    ck.adam.step = header.at("step");
    ck.rng_state = header.at("rng_state");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad checkpoint header: ") + e.what());
  }
  ck.model.config = ck.model_config;
  ck.model.layout = ModelLayout::build(ck.model_config);
  const std::size_t n = ck.model.layout.total;
  auto blob = [&](std::vector<float>& v) {
    v.resize(n);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
      throw Error(ErrorCode::kParse, "truncated checkpoint blob");
    }
  };
  blob(ck.model.params);
  blob(ck.adam.m);
  blob(ck.adam.v);
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  write_checkpoint(os, ck);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open checkpoint '" + path + "'");
  return read_checkpoint(is);
}

Trainer::Trainer(const ModelConfig& mcfg, const TrainConfig& tcfg, RuleSet rules)
    : tcfg_(tcfg), rules_(std::move(rules)), rng_(tcfg.seed ^ 0x9E3779B97F4A7C15ull) {
  tcfg_.validate();
  model_ = init_model<float>(mcfg, tcfg.seed);
  adam_.m.assign(model_.layout.total, 0.0f);
  adam_.v.assign(model_.layout.total, 0.0f);
}

Trainer::Trainer(const Checkpoint& ck, RuleSet rules)
    : tcfg_(ck.train_config), rules_(std::move(rules)), model_(ck.model), adam_(ck.adam),
      epochs_done_(ck.epochs_done) {
  tcfg_.validate();
  std::istringstream ss(ck.rng_state);
  ss >> rng_;
  if (!ss) throw Error(ErrorCode::kParse, "bad RNG state in checkpoint");
}

double Trainer::train_step(std::span<const Example> batch) {
  std::vector<TokenizedSequence> seqs;
  std::vector<int> labels;
  seqs.reserve(batch.size());
  for (const auto& ex : batch) {
    seqs.push_back(ex.sequence);
    labels.push_back(ex.label);
  }
  std::vector<float> grads;
  std::vector<SequenceTrace<float>> traces;
  const float loss = loss_and_gradients(model_, std::span<const TokenizedSequence>(seqs),
                                        std::span<const int>(labels), rules_, grads,
                                        tcfg_.threads, &traces);
  const std::uint64_t step = adam_.step + 1;
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::kNumeric, "non-finite loss at step " + std::to_string(step));
  }
  if (tcfg_.check_leakage && model_.config.strategy == Strategy::kHard) {
    for (const auto& tr : traces) {
      const double leak = max_disallowed_probability(tr);
      if (leak > kLeakageTolerance) {
        throw Error(ErrorCode::kNumeric, "attention leaked " + std::to_string(leak) +
                                             " onto a disallowed pair at step " + std::to_string(step));
      }
    }
  }
  adamw_step<float>(model_.params, grads, adam_.m, adam_.v, tcfg_, step);
  adam_.step = step;
  return loss;
}

EpochRecord Trainer::run_epoch(std::span<const Example> train, std::span<const Example> dev) {
  if (train.empty() || dev.empty()) throw Error(ErrorCode::kInvalidArgument, "empty train or dev set");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);

  EpochRecord rec;
  rec.epoch = epochs_done_ + 1;
  double total = 0.0;
  std::size_t batches = 0;
  std::vector<Example> batch;
  for (std::size_t start = 0; start < order.size(); start += tcfg_.batch_size) {
    batch.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + tcfg_.batch_size); ++i) {
      batch.push_back(train[order[i]]);
    }
    const double loss = train_step(batch);
    if (batches == 0) rec.first_batch_loss = loss;
    rec.last_batch_loss = loss;
    total += loss;
    ++batches;
  }
  rec.mean_loss = total / static_cast<double>(batches);
  rec.dev = evaluate(model_, dev, rules_);
  ++epochs_done_;
  return rec;
}

Checkpoint Trainer::checkpoint() const {
  std::ostringstream ss;
  ss << rng_;
  return {model_.config, tcfg_, model_, adam_, epochs_done_, ss.str()};
}

TrainResult train(const ModelConfig& mcfg, const TrainConfig& tcfg, const RuleSet& rs,
                  std::span<const Example> train_set, std::span<const Example> dev_set) {
  Trainer t(mcfg, tcfg, rs);
  TrainResult r;
  while (t.epochs_done() < tcfg.epochs) r.history.push_back(t.run_epoch(train_set, dev_set));
  r.checkpoint = t.checkpoint();
  return r;
}

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch,mean_loss,first_batch_loss,last_batch_loss,dev_accuracy,dev_macro_f1,dev_weighted_f1\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.mean_loss,
                  r.first_batch_loss, r.last_batch_loss, r.dev.accuracy, r.dev.macro_f1,
                  r.dev.weighted_f1);
    os << buf;
  }
}

}  // namespace gramattn
