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
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "gramattn/attention.hpp"
#include "gramattn/mask.hpp"
#include "gramattn/rules.hpp"
#include "gramattn/tensor.hpp"
#include "gramattn/tokenize.hpp"

namespace gramattn {

enum class Strategy : std::uint8_t { kNone, kHard, kSoft };

std::string_view strategy_name(Strategy s) noexcept;
/// Accepts none|hard|soft. Throws Error(kInvalidArgument).
Strategy parse_strategy(std::string_view name);

struct ModelConfig {
  std::size_t num_layers = 2;
  std::size_t hidden = 128;
  std::size_t num_heads = 2;
  std::size_t ffn_dim = 512;
  std::size_t vocab_size = 8192;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t num_classes = 2;
  Strategy strategy = Strategy::kNone;

  AttentionConfig attention() const { return {num_heads, hidden / num_heads}; }
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct LayerOffsets {
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t ln1_gamma, ln1_beta;
  std::size_t w1, b1, w2, b2;
  std::size_t ln2_gamma, ln2_beta;
};

// Flat parameter layout. Every tensor lives at a fixed offset in one buffer,
// so optimizer state and gradients share the same indexing.
struct ModelLayout {
  std::vector<TensorInfo> tensors;
  std::vector<LayerOffsets> layers;
  std::size_t token_embedding = 0;
  std::size_t position_embedding = 0;
  std::size_t classifier_w = 0;
  std::size_t classifier_b = 0;
  std::size_t total = 0;

  static ModelLayout build(const ModelConfig& cfg);
};

std::size_t parameter_count(const ModelConfig& cfg);

template <typename T>
struct Model {
  ModelConfig config;
  ModelLayout layout;
  std::vector<T> params;
};

/// Truncated normal (sigma 0.02, cut at 2 sigma) for embeddings and weight
/// matrices, zero biases, unit layer-norm scales. Deterministic in `seed`.
template <typename T>
Model<T> init_model(const ModelConfig& cfg, std::uint64_t seed);

template <typename T, typename U>
Model<T> convert_model(const Model<U>& m) {
  Model<T> out{m.config, m.layout, std::vector<T>(m.params.begin(), m.params.end())};
  return out;
}

struct ForwardOptions {
  // Drop padding positions before the encoder. Pads are masked as keys and
  // only position 0 feeds the classifier, so logits are unchanged.
  bool trim_padding = true;
};

template <typename T>
struct LayerNormCache {
  Matrix<T> xhat;
  std::vector<T> rstd;
};

template <typename T>
struct LayerTrace {
  MultiHeadCache<T> attention;
  LayerNormCache<T> ln1;
  Matrix<T> h1;        // output of the first residual + layer norm
  Matrix<T> ffn_pre;   // h1 W1 + b1
  Matrix<T> ffn_act;   // gelu(ffn_pre)
  LayerNormCache<T> ln2;
};

template <typename T>
struct SequenceTrace {
  std::vector<std::int32_t> ids;
  std::size_t length = 0;
  bool has_mask = false;
  GrammaticalMask mask;  // grammatical bias shared by every layer and head
  std::vector<std::uint8_t> pad;
  std::vector<LayerTrace<T>> layers;
  Matrix<T> final_hidden;
};

/// Mask the strategy prescribes for the first `length` positions of `seq`.
/// Returns false for Strategy::kNone.
bool strategy_mask(Strategy s, const RuleSet& rs, const TokenizedSequence& seq, std::size_t length,
                   GrammaticalMask& out);

/// Logits for one sequence; fills `trace` when given.
template <typename T>
std::vector<T> forward_sequence(const Model<T>& model, const TokenizedSequence& seq,
                                const RuleSet& rs, const ForwardOptions& opts,
                                std::type_identity_t<SequenceTrace<T>>* trace);

/// Accumulates parameter gradients for d(loss)/d(logits) = `d_logits`.
template <typename T>
void backward_sequence(const Model<T>& model, const SequenceTrace<T>& trace,
                       std::span<const T> d_logits, std::span<T> grads);

/// (batch x num_classes) logits.
template <typename T>
Matrix<T> forward(const Model<T>& model, std::span<const TokenizedSequence> batch,
                  const RuleSet& rs, const ForwardOptions& opts = {});

/// Mean negative log-softmax of the true class. Fills `d_logits` when given.
/// Throws Error(kInvalidArgument) for out-of-range labels.
template <typename T>
T cross_entropy(const Matrix<T>& logits, std::span<const int> labels, Matrix<T>* d_logits = nullptr);

/// Mean batch loss and its gradient (written to `grads`, resized to the
/// parameter count). Per-sample gradients are reduced in sample order, so the
/// result does not depend on `threads`.
template <typename T>
T loss_and_gradients(const Model<T>& model, std::span<const TokenizedSequence> batch,
                     std::span<const int> labels, const RuleSet& rs, std::vector<T>& grads,
                     std::size_t threads = 1, std::vector<SequenceTrace<T>>* traces = nullptr);

/// Largest post-softmax probability on a hard-disallowed pair across every
/// layer and head of `trace`. Zero when there is no mask.
template <typename T>
double max_disallowed_probability(const SequenceTrace<T>& trace);

}  // namespace gramattn
