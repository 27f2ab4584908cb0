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

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gramattn/mask.hpp"
#include "gramattn/tensor.hpp"

namespace gramattn {

struct AttentionConfig {
  std::size_t num_heads = 1;
  std::size_t head_dim = 1;

  double scale() const { return 1.0 / std::sqrt(static_cast<double>(head_dim)); }
  std::size_t hidden() const { return num_heads * head_dim; }
  /// Throws Error(kInvalidArgument) when a dimension is zero.
  void validate() const;
};

// Everything the backward pass needs from one single-head forward call.
template <typename T>
struct AttentionCache {
  Matrix<T> q, k, v;
  Matrix<T> scores;  // scaled QK^T with grammatical bias and padding applied
  Matrix<T> probs;
  T scale = T(1);
};

template <typename T>
struct AttentionOutput {
  Matrix<T> output;
  AttentionCache<T> cache;
};

template <typename T>
struct AttentionGrads {
  Matrix<T> dq, dk, dv;
};

// Pair counters for the sparse path. Exact, not sampled.
struct OpCounters {
  std::uint64_t score_pairs = 0;   // q.k dot products evaluated
  std::uint64_t score_macs = 0;    // score_pairs * head_dim
  std::uint64_t value_macs = 0;    // weighted-sum multiply-adds
};

/// Stable row softmax: subtract the row max, exponentiate, normalize.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& scores);

/// scores = QK^T * scale; scores += mask; padded keys overwritten with the
/// mask sentinel; probs = softmax(scores); output = probs V.
/// `mask` may be null (no grammatical bias); `pad` may be empty.
template <typename T>
AttentionOutput<T> attention_forward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                     const GrammaticalMask* mask,
                                     std::span<const std::uint8_t> pad = {});

/// Gradients with respect to Q, K and V. The mask is treated as a constant.
template <typename T>
AttentionGrads<T> attention_backward(const AttentionCache<T>& cache, const Matrix<T>& d_output);

/// Hard-masked attention evaluated only over each row's allowed keys.
template <typename T>
Matrix<T> sparse_attention_forward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                   const SparseMask& mask, OpCounters* counters = nullptr);

// Views into externally owned projection parameters. Weight matrices are
// (in x out): y = x W + b.
template <typename T>
struct MultiHeadWeights {
  ConstMatView<T> wq, wk, wv, wo;
  std::span<const T> bq, bk, bv, bo;
};

template <typename T>
struct MultiHeadGrads {
  MatView<T> wq, wk, wv, wo;
  std::span<T> bq, bk, bv, bo;
};

template <typename T>
struct MultiHeadCache {
  Matrix<T> x;
  std::vector<AttentionCache<T>> heads;
  Matrix<T> concat;  // heads side by side, before the output projection
};

/// Same grammatical mask for every head.
template <typename T>
Matrix<T> multi_head_forward(const Matrix<T>& x, const MultiHeadWeights<T>& w,
                             const AttentionConfig& cfg, const GrammaticalMask* mask,
                             std::span<const std::uint8_t> pad, std::type_identity_t<MultiHeadCache<T>>* cache);

/// Accumulates parameter gradients into `grads` and returns dX.
template <typename T>
Matrix<T> multi_head_backward(const MultiHeadCache<T>& cache, const MultiHeadWeights<T>& w,
                              const AttentionConfig& cfg, const Matrix<T>& d_y,
                              const MultiHeadGrads<T>& grads);

}  // namespace gramattn
