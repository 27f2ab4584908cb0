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

#include "gramattn/attention.hpp"

#include <algorithm>
#include <string>

#include "gramattn/error.hpp"

namespace gramattn {
namespace {

template <typename T>
void check_qkv(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v) {
  if (q.cols != k.cols || k.rows != v.rows || q.cols == 0) {
    throw Error(ErrorCode::kShape, "attention shape mismatch: Q " + std::to_string(q.rows) + "x" +
                                       std::to_string(q.cols) + ", K " + std::to_string(k.rows) +
                                       "x" + std::to_string(k.cols) + ", V " +
                                       std::to_string(v.rows) + "x" + std::to_string(v.cols));
  }
}

template <typename T>
void softmax_in_place(std::span<T> row) {
  T mx = row[0];
  for (T s : row) mx = std::max(mx, s);
  T sum = 0;
  for (T& s : row) {
    s = std::exp(s - mx);
    sum += s;
  }
  const T inv = T(1) / sum;
  for (T& s : row) s *= inv;
}

template <typename T>
Matrix<T> columns(const Matrix<T>& m, std::size_t first, std::size_t count) {
  Matrix<T> out(m.rows, count);
  for (std::size_t i = 0; i < m.rows; ++i) {
    std::copy_n(m.data.data() + i * m.cols + first, count, out.data.data() + i * count);
  }
  return out;
}

template <typename T>
void add_columns(Matrix<T>& dst, std::size_t first, const Matrix<T>& src) {
  for (std::size_t i = 0; i < src.rows; ++i) {
    T* d = dst.data.data() + i * dst.cols + first;
    const T* s = src.data.data() + i * src.cols;
    for (std::size_t j = 0; j < src.cols; ++j) d[j] += s[j];
  }
}

template <typename T>
Matrix<T> project(const Matrix<T>& x, ConstMatView<T> w, std::span<const T> b) {
  Matrix<T> y(x.rows, w.cols);
  matmul<T>(x.view(), w, y.view());
  for (std::size_t i = 0; i < y.rows; ++i) {
    for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += b[j];
  }
  return y;
}

// Given dY of y = x W + b: accumulate dW, db; return dX.
template <typename T>
Matrix<T> project_backward(const Matrix<T>& x, ConstMatView<T> w, const Matrix<T>& dy,
                           MatView<T> dw, std::span<T> db) {
  matmul_at<T>(x.view(), dy.view(), dw, true);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    for (std::size_t j = 0; j < dy.cols; ++j) db[j] += dy(i, j);
  }
  Matrix<T> dx(x.rows, x.cols);
  matmul_bt<T>(dy.view(), w, dx.view());
  return dx;
}

}  // namespace

void AttentionConfig::validate() const {
  if (num_heads == 0 || head_dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "num_heads and head_dim must be >= 1");
  }
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& scores) {
  Matrix<T> p = scores;
  for (std::size_t i = 0; i < p.rows; ++i) softmax_in_place(p.row(i));
  return p;
}

template <typename T>
AttentionOutput<T> attention_forward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                     const GrammaticalMask* mask,
                                     std::span<const std::uint8_t> pad) {
  check_qkv(q, k, v);
  const std::size_t lq = q.rows, lk = k.rows;
  if (mask && (mask->length != lq || mask->length != lk)) {
    throw Error(ErrorCode::kShape, "mask length " + std::to_string(mask->length) +
                                       " does not match sequence length " + std::to_string(lq));
  }
  if (!pad.empty() && pad.size() != lk) {
    throw Error(ErrorCode::kShape, "padding flags length mismatch");
  }

  AttentionOutput<T> out;
  auto& c = out.cache;
  c.q = q;
  c.k = k;
  c.v = v;
  c.scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q.cols)));
  c.scores = Matrix<T>(lq, lk);
  matmul_bt<T>(q.view(), k.view(), c.scores.view());
  for (std::size_t i = 0; i < lq; ++i) {
    T* row = c.scores.data.data() + i * lk;
    for (std::size_t j = 0; j < lk; ++j) {
      row[j] *= c.scale;
      if (mask) row[j] += static_cast<T>(mask->at(i, j));
      if (!pad.empty() && pad[j]) row[j] = static_cast<T>(kMaskNeg);
    }
  }
  c.probs = softmax_rows(c.scores);
  out.output = Matrix<T>(lq, v.cols);
  matmul<T>(c.probs.view(), v.view(), out.output.view());
  return out;
}

template <typename T>
AttentionGrads<T> attention_backward(const AttentionCache<T>& c, const Matrix<T>& d_output) {
  if (d_output.rows != c.probs.rows || d_output.cols != c.v.cols) {
    throw Error(ErrorCode::kShape, "d_output shape does not match forward output");
  }
  AttentionGrads<T> g;
  g.dv = Matrix<T>(c.v.rows, c.v.cols);
  matmul_at<T>(c.probs.view(), d_output.view(), g.dv.view());

  Matrix<T> dp(c.probs.rows, c.probs.cols);
  matmul_bt<T>(d_output.view(), c.v.view(), dp.view());
  // Softmax Jacobian, then the 1/sqrt(d) scale.
  for (std::size_t i = 0; i < dp.rows; ++i) {
    auto p = c.probs.row(i);
    auto d = dp.row(i);
    T dot = 0;
    for (std::size_t j = 0; j < d.size(); ++j) dot += p[j] * d[j];
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = p[j] * (d[j] - dot) * c.scale;
  }
  g.dq = Matrix<T>(c.q.rows, c.q.cols);
  matmul<T>(dp.view(), c.k.view(), g.dq.view());
  g.dk = Matrix<T>(c.k.rows, c.k.cols);
  matmul_at<T>(dp.view(), c.q.view(), g.dk.view());
  return g;
}

template <typename T>
Matrix<T> sparse_attention_forward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                   const SparseMask& mask, OpCounters* counters) {
  check_qkv(q, k, v);
  if (mask.length != q.rows || mask.length != k.rows) {
    throw Error(ErrorCode::kShape, "sparse mask length does not match sequence length");
  }
  const std::size_t d = q.cols;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
  Matrix<T> out(q.rows, v.cols);
  std::vector<T> w;
  for (std::size_t r = 0; r < q.rows; ++r) {
    auto keys = mask.row(r);
    if (keys.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "sparse mask row " + std::to_string(r) + " is empty");
    }
    w.resize(keys.size());
    const T* qr = q.data.data() + r * d;
    for (std::size_t n = 0; n < keys.size(); ++n) {
      const T* kr = k.data.data() + std::size_t{keys[n]} * d;
      T s = 0;
      for (std::size_t p = 0; p < d; ++p) s += qr[p] * kr[p];
      w[n] = s * scale;
    }
    softmax_in_place(std::span<T>(w));
    T* o = out.data.data() + r * v.cols;
    for (std::size_t n = 0; n < keys.size(); ++n) {
      const T* vr = v.data.data() + std::size_t{keys[n]} * v.cols;
      for (std::size_t p = 0; p < v.cols; ++p) o[p] += w[n] * vr[p];
    }
    if (counters) {
      counters->score_pairs += keys.size();
      counters->score_macs += keys.size() * d;
      counters->value_macs += keys.size() * v.cols;
    }
  }
  return out;
}

template <typename T>
Matrix<T> multi_head_forward(const Matrix<T>& x, const MultiHeadWeights<T>& w,
                             const AttentionConfig& cfg, const GrammaticalMask* mask,
                             std::span<const std::uint8_t> pad, std::type_identity_t<MultiHeadCache<T>>* cache) {
  cfg.validate();
  const std::size_t hidden = cfg.hidden();
  if (x.cols != hidden || w.wq.rows != hidden || w.wq.cols != hidden || w.wo.rows != hidden) {
    throw Error(ErrorCode::kShape, "hidden size " + std::to_string(x.cols) +
                                       " != num_heads * head_dim = " + std::to_string(hidden));
  }
  const Matrix<T> q = project(x, w.wq, w.bq);
  const Matrix<T> k = project(x, w.wk, w.bk);
  const Matrix<T> v = project(x, w.wv, w.bv);
  Matrix<T> concat(x.rows, hidden);
  std::vector<AttentionCache<T>> heads;
  heads.reserve(cfg.num_heads);
  for (std::size_t h = 0; h < cfg.num_heads; ++h) {
    const std::size_t off = h * cfg.head_dim;
    auto r = attention_forward(columns(q, off, cfg.head_dim), columns(k, off, cfg.head_dim),
                               columns(v, off, cfg.head_dim), mask, pad);
    add_columns(concat, off, r.output);
    heads.push_back(std::move(r.cache));
  }
  Matrix<T> y = project(concat, w.wo, w.bo);
  if (cache) {
    cache->x = x;
    cache->heads = std::move(heads);
    cache->concat = std::move(concat);
  }
  return y;
}

template <typename T>
Matrix<T> multi_head_backward(const MultiHeadCache<T>& cache, const MultiHeadWeights<T>& w,
                              const AttentionConfig& cfg, const Matrix<T>& d_y,
                              const MultiHeadGrads<T>& grads) {
  const std::size_t hidden = cfg.hidden();
  const std::size_t n = cache.x.rows;
  if (d_y.rows != n || d_y.cols != hidden || cache.heads.size() != cfg.num_heads) {
    throw Error(ErrorCode::kShape, "multi-head backward shape mismatch");
  }
  const Matrix<T> d_concat = project_backward(cache.concat, w.wo, d_y, grads.wo, grads.bo);
  Matrix<T> dq(n, hidden), dk(n, hidden), dv(n, hidden);
  for (std::size_t h = 0; h < cfg.num_heads; ++h) {
    const std::size_t off = h * cfg.head_dim;
    auto g = attention_backward(cache.heads[h], columns(d_concat, off, cfg.head_dim));
    add_columns(dq, off, g.dq);
    add_columns(dk, off, g.dk);
    add_columns(dv, off, g.dv);
  }
  Matrix<T> dx = project_backward(cache.x, w.wq, dq, grads.wq, grads.bq);
  const Matrix<T> dxk = project_backward(cache.x, w.wk, dk, grads.wk, grads.bk);
  const Matrix<T> dxv = project_backward(cache.x, w.wv, dv, grads.wv, grads.bv);
  for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dxk.data[i] + dxv.data[i];
  return dx;
}

#define GRAMATTN_INSTANTIATE(T)                                                                  \
  template Matrix<T> softmax_rows<T>(const Matrix<T>&);                                          \
  template AttentionOutput<T> attention_forward<T>(const Matrix<T>&, const Matrix<T>&,           \
                                                   const Matrix<T>&, const GrammaticalMask*,     \
                                                   std::span<const std::uint8_t>);               \
  template AttentionGrads<T> attention_backward<T>(const AttentionCache<T>&, const Matrix<T>&);  \
  template Matrix<T> sparse_attention_forward<T>(const Matrix<T>&, const Matrix<T>&,             \
                                                 const Matrix<T>&, const SparseMask&,            \
                                                 OpCounters*);                                   \
  template Matrix<T> multi_head_forward<T>(const Matrix<T>&, const MultiHeadWeights<T>&,         \
                                           const AttentionConfig&, const GrammaticalMask*,       \
                                           std::span<const std::uint8_t>, MultiHeadCache<T>*);   \
  template Matrix<T> multi_head_backward<T>(const MultiHeadCache<T>&,                            \
                                            const MultiHeadWeights<T>&, const AttentionConfig&,  \
                                            const Matrix<T>&, const MultiHeadGrads<T>&);

GRAMATTN_INSTANTIATE(float)
GRAMATTN_INSTANTIATE(double)

#undef GRAMATTN_INSTANTIATE

}  // namespace gramattn
