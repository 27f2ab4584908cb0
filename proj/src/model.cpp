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

#include "gramattn/model.hpp"

#include <cmath>
#include <random>
#include <thread>

#include "gramattn/error.hpp"

namespace gramattn {
namespace {

constexpr double kLayerNormEps = 1e-12;
constexpr double kInitStd = 0.02;

template <typename T>
ConstMatView<T> cview(const std::vector<T>& p, std::size_t off, std::size_t r, std::size_t c) {
  return {p.data() + off, r, c};
}

template <typename T>
MatView<T> mview(std::span<T> p, std::size_t off, std::size_t r, std::size_t c) {
  return {p.data() + off, r, c};
}

template <typename T>
std::span<const T> cspan(const std::vector<T>& p, std::size_t off, std::size_t n) {
  return {p.data() + off, n};
}

template <typename T>
MultiHeadWeights<T> attention_weights(const Model<T>& m, const LayerOffsets& l) {
  const std::size_t h = m.config.hidden;
  const auto& p = m.params;
  return {cview(p, l.wq, h, h), cview(p, l.wk, h, h), cview(p, l.wv, h, h), cview(p, l.wo, h, h),
          cspan(p, l.bq, h),    cspan(p, l.bk, h),    cspan(p, l.bv, h),    cspan(p, l.bo, h)};
}

template <typename T>
MultiHeadGrads<T> attention_grads(const ModelConfig& cfg, const LayerOffsets& l, std::span<T> g) {
  const std::size_t h = cfg.hidden;
  return {mview(g, l.wq, h, h), mview(g, l.wk, h, h), mview(g, l.wv, h, h), mview(g, l.wo, h, h),
          g.subspan(l.bq, h),   g.subspan(l.bk, h),   g.subspan(l.bv, h),   g.subspan(l.bo, h)};
}

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, std::span<const T> gamma, std::span<const T> beta,
                     LayerNormCache<T>* cache) {
  Matrix<T> y(x.rows, x.cols);
  LayerNormCache<T> c{Matrix<T>(x.rows, x.cols), std::vector<T>(x.rows)};
  const T n = static_cast<T>(x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto r = x.row(i);
    T mean = 0;
    for (T v : r) mean += v;
    mean /= n;
    T var = 0;
    for (T v : r) var += (v - mean) * (v - mean);
    var /= n;
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    c.rstd[i] = rstd;
    for (std::size_t j = 0; j < x.cols; ++j) {
      const T xh = (r[j] - mean) * rstd;
      c.xhat(i, j) = xh;
      y(i, j) = xh * gamma[j] + beta[j];
    }
  }
  if (cache) *cache = std::move(c);
  return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const LayerNormCache<T>& c, std::span<const T> gamma,
                              const Matrix<T>& dy, std::span<T> dgamma, std::span<T> dbeta) {
  Matrix<T> dx(dy.rows, dy.cols);
  const T n = static_cast<T>(dy.cols);
  std::vector<T> dxhat(dy.cols);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    T sum = 0, sum_x = 0;
    for (std::size_t j = 0; j < dy.cols; ++j) {
      dgamma[j] += dy(i, j) * c.xhat(i, j);
      dbeta[j] += dy(i, j);
      dxhat[j] = dy(i, j) * gamma[j];
      sum += dxhat[j];
      sum_x += dxhat[j] * c.xhat(i, j);
    }
    for (std::size_t j = 0; j < dy.cols; ++j) {
      dx(i, j) = c.rstd[i] * (dxhat[j] - sum / n - c.xhat(i, j) * sum_x / n);
    }
  }
  return dx;
}

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * static_cast<T>(M_PI));
  return cdf + x * pdf;
}

template <typename T>
Matrix<T> affine(const Matrix<T>& x, ConstMatView<T> w, std::span<const T> b) {
  Matrix<T> y(x.rows, w.cols);
  matmul<T>(x.view(), w, y.view());
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += b[j];
  return y;
}

}  // namespace

std::string_view strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::kHard: return "hard";
    case Strategy::kSoft: return "soft";
    default: return "none";
  }
}

Strategy parse_strategy(std::string_view name) {
  if (name == "none") return Strategy::kNone;
  if (name == "hard") return Strategy::kHard;
  if (name == "soft") return Strategy::kSoft;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown strategy '" + std::string(name) + "' (expected none|hard|soft)");
}

void ModelConfig::validate() const {
  if (num_layers == 0 || hidden == 0 || num_heads == 0 || ffn_dim == 0 || vocab_size == 0 ||
      max_len < 3 || num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "model dimensions must be positive (max_len >= 3, classes >= 2)");
  }
  if (hidden % num_heads != 0) {
    throw Error(ErrorCode::kInvalidArgument, "hidden (" + std::to_string(hidden) +
                                                 ") is not divisible by num_heads (" +
                                                 std::to_string(num_heads) + ")");
  }
}

ModelLayout ModelLayout::build(const ModelConfig& cfg) {
  cfg.validate();
  ModelLayout l;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    const std::size_t off = l.total;
    l.tensors.push_back({std::move(name), std::move(shape), off, n});
    l.total += n;
    return off;
  };
  const std::size_t h = cfg.hidden, f = cfg.ffn_dim;
  l.token_embedding = add("embeddings.token", {cfg.vocab_size, h});
  l.position_embedding = add("embeddings.position", {cfg.max_len, h});
  for (std::size_t i = 0; i < cfg.num_layers; ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    LayerOffsets o{};
    o.wq = add(p + "attention.wq", {h, h});
    o.bq = add(p + "attention.bq", {h});
    o.wk = add(p + "attention.wk", {h, h});
    o.bk = add(p + "attention.bk", {h});
    o.wv = add(p + "attention.wv", {h, h});
    o.bv = add(p + "attention.bv", {h});
    o.wo = add(p + "attention.wo", {h, h});
    o.bo = add(p + "attention.bo", {h});
    o.ln1_gamma = add(p + "ln1.gamma", {h});
    o.ln1_beta = add(p + "ln1.beta", {h});
    o.w1 = add(p + "ffn.w1", {h, f});
    o.b1 = add(p + "ffn.b1", {f});
    o.w2 = add(p + "ffn.w2", {f, h});
    o.b2 = add(p + "ffn.b2", {h});
    o.ln2_gamma = add(p + "ln2.gamma", {h});
    o.ln2_beta = add(p + "ln2.beta", {h});
    l.layers.push_back(o);
  }
  l.classifier_w = add("classifier.w", {h, cfg.num_classes});
  l.classifier_b = add("classifier.b", {cfg.num_classes});
  return l;
}

std::size_t parameter_count(const ModelConfig& cfg) { return ModelLayout::build(cfg).total; }

template <typename T>
Model<T> init_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model<T> m{cfg, ModelLayout::build(cfg), {}};
  m.params.assign(m.layout.total, T(0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, kInitStd);
  for (const auto& t : m.layout.tensors) {
    auto span = std::span<T>(m.params).subspan(t.offset, t.size);
    const bool is_gamma = t.name.ends_with(".gamma");
    if (is_gamma) {
      std::fill(span.begin(), span.end(), T(1));
    } else if (t.shape.size() == 2) {
      for (T& v : span) {
        double z;
        do {
          z = normal(rng);
        } while (std::abs(z) > 2.0 * kInitStd);
        v = static_cast<T>(z);
      }
    }
  }
  return m;
}

bool strategy_mask(Strategy s, const RuleSet& rs, const TokenizedSequence& seq, std::size_t length,
                   GrammaticalMask& out) {
  if (s == Strategy::kNone) return false;
  std::span<const PosTag> tags(seq.tags.data(), length);
  out = s == Strategy::kHard ? build_hard_mask(rs, tags) : build_soft_mask(rs, tags);
  return true;
}

template <typename T>
std::vector<T> forward_sequence(const Model<T>& model, const TokenizedSequence& seq,
                                const RuleSet& rs, const ForwardOptions& opts,
                                std::type_identity_t<SequenceTrace<T>>* trace) {
  const ModelConfig& cfg = model.config;
  const ModelLayout& lay = model.layout;
  const auto& p = model.params;
  if (seq.length() > cfg.max_len) {
    throw Error(ErrorCode::kInvalidArgument, "sequence length " + std::to_string(seq.length()) +
                                                 " exceeds max_len " + std::to_string(cfg.max_len));
  }
  if (seq.tags.size() != seq.length() || seq.pad.size() != seq.length()) {
    throw Error(ErrorCode::kShape, "tokenized sequence fields have inconsistent lengths");
  }
  const std::size_t n = opts.trim_padding ? seq.live_length : seq.length();
  if (n == 0 || n > seq.length()) throw Error(ErrorCode::kShape, "empty or inconsistent sequence");
  const std::size_t h = cfg.hidden;

  SequenceTrace<T> local;
  SequenceTrace<T>& tr = trace ? *trace : local;
  tr = {};
  tr.length = n;
  tr.ids.assign(seq.ids.begin(), seq.ids.begin() + n);
  if (!opts.trim_padding) tr.pad.assign(seq.pad.begin(), seq.pad.end());
  tr.has_mask = strategy_mask(cfg.strategy, rs, seq, n, tr.mask);

  Matrix<T> x(n, h);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = tr.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw Error(ErrorCode::kInvalidArgument, "token id " + std::to_string(id) +
                                                   " outside vocabulary of size " +
                                                   std::to_string(cfg.vocab_size));
    }
    const T* te = p.data() + lay.token_embedding + static_cast<std::size_t>(id) * h;
    const T* pe = p.data() + lay.position_embedding + i * h;
    for (std::size_t j = 0; j < h; ++j) x(i, j) = te[j] + pe[j];
  }

  const AttentionConfig acfg = cfg.attention();
  const GrammaticalMask* mask = tr.has_mask ? &tr.mask : nullptr;
  tr.layers.resize(cfg.num_layers);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const LayerOffsets& o = lay.layers[l];
    LayerTrace<T>& lt = tr.layers[l];
    Matrix<T> a = multi_head_forward(x, attention_weights(model, o), acfg, mask,
                                     std::span<const std::uint8_t>(tr.pad), &lt.attention);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += x.data[i];
    lt.h1 = layer_norm(a, cspan(p, o.ln1_gamma, h), cspan(p, o.ln1_beta, h), &lt.ln1);
    lt.ffn_pre = affine(lt.h1, cview(p, o.w1, h, cfg.ffn_dim), cspan(p, o.b1, cfg.ffn_dim));
    lt.ffn_act = lt.ffn_pre;
    for (T& v : lt.ffn_act.data) v = gelu(v);
    Matrix<T> f = affine(lt.ffn_act, cview(p, o.w2, cfg.ffn_dim, h), cspan(p, o.b2, h));
    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] += lt.h1.data[i];
    x = layer_norm(f, cspan(p, o.ln2_gamma, h), cspan(p, o.ln2_beta, h), &lt.ln2);
  }

  std::vector<T> logits(cfg.num_classes);
  const T* w = p.data() + lay.classifier_w;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    T s = p[lay.classifier_b + c];
    for (std::size_t j = 0; j < h; ++j) s += x(0, j) * w[j * cfg.num_classes + c];
    logits[c] = s;
  }
  tr.final_hidden = std::move(x);
  return logits;
}

template <typename T>
void backward_sequence(const Model<T>& model, const SequenceTrace<T>& tr,
                       std::span<const T> d_logits, std::span<T> g) {
  const ModelConfig& cfg = model.config;
  const ModelLayout& lay = model.layout;
  const auto& p = model.params;
  const std::size_t h = cfg.hidden, n = tr.length, nc = cfg.num_classes;
  if (d_logits.size() != nc || g.size() != lay.total || tr.layers.size() != cfg.num_layers) {
    throw Error(ErrorCode::kShape, "backward_sequence shape mismatch");
  }

  Matrix<T> dx(n, h);
  const T* w = p.data() + lay.classifier_w;
  for (std::size_t c = 0; c < nc; ++c) g[lay.classifier_b + c] += d_logits[c];
  for (std::size_t j = 0; j < h; ++j) {
    T s = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      g[lay.classifier_w + j * nc + c] += tr.final_hidden(0, j) * d_logits[c];
      s += w[j * nc + c] * d_logits[c];
    }
    dx(0, j) = s;
  }

  const AttentionConfig acfg = cfg.attention();
  for (std::size_t l = cfg.num_layers; l-- > 0;) {
    const LayerOffsets& o = lay.layers[l];
    const LayerTrace<T>& lt = tr.layers[l];
    // x_out = LN2(h1 + FFN(h1))
    Matrix<T> df = layer_norm_backward(lt.ln2, cspan(p, o.ln2_gamma, h), dx,
                                       g.subspan(o.ln2_gamma, h), g.subspan(o.ln2_beta, h));
    Matrix<T> dh1 = df;
    matmul_at<T>(lt.ffn_act.view(), df.view(), mview(g, o.w2, cfg.ffn_dim, h), true);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < h; ++j) g[o.b2 + j] += df(i, j);
    Matrix<T> dact(n, cfg.ffn_dim);
    matmul_bt<T>(df.view(), cview(p, o.w2, cfg.ffn_dim, h), dact.view());
    for (std::size_t i = 0; i < dact.data.size(); ++i) dact.data[i] *= gelu_grad(lt.ffn_pre.data[i]);
    matmul_at<T>(lt.h1.view(), dact.view(), mview(g, o.w1, h, cfg.ffn_dim), true);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < cfg.ffn_dim; ++j) g[o.b1 + j] += dact(i, j);
    matmul_bt<T>(dact.view(), cview(p, o.w1, h, cfg.ffn_dim), dh1.view(), true);
    // h1 = LN1(x + MHA(x))
    Matrix<T> da = layer_norm_backward(lt.ln1, cspan(p, o.ln1_gamma, h), dh1,
                                       g.subspan(o.ln1_gamma, h), g.subspan(o.ln1_beta, h));
    Matrix<T> dxin = multi_head_backward(lt.attention, attention_weights(model, o), acfg, da,
                                         attention_grads(cfg, o, g));
    for (std::size_t i = 0; i < dxin.data.size(); ++i) dxin.data[i] += da.data[i];
    dx = std::move(dxin);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t te = lay.token_embedding + static_cast<std::size_t>(tr.ids[i]) * h;
    const std::size_t pe = lay.position_embedding + i * h;
    for (std::size_t j = 0; j < h; ++j) {
      g[te + j] += dx(i, j);
      g[pe + j] += dx(i, j);
    }
  }
}

template <typename T>
Matrix<T> forward(const Model<T>& model, std::span<const TokenizedSequence> batch,
                  const RuleSet& rs, const ForwardOptions& opts) {
  Matrix<T> logits(batch.size(), model.config.num_classes);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto row = forward_sequence(model, batch[b], rs, opts, nullptr);
    std::copy(row.begin(), row.end(), logits.row(b).begin());
  }
  return logits;
}

template <typename T>
T cross_entropy(const Matrix<T>& logits, std::span<const int> labels, Matrix<T>* d_logits) {
  if (labels.size() != logits.rows || logits.rows == 0) {
    throw Error(ErrorCode::kShape, "labels/logits batch size mismatch");
  }
  if (d_logits) *d_logits = Matrix<T>(logits.rows, logits.cols);
  T total = 0;
  const T inv_b = T(1) / static_cast<T>(logits.rows);
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) {
      throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(y) + " out of range");
    }
    auto r = logits.row(b);
    T mx = r[0];
    for (T v : r) mx = std::max(mx, v);
    T sum = 0;
    for (T v : r) sum += std::exp(v - mx);
    const T lse = mx + std::log(sum);
    total += lse - r[y];
    if (d_logits) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        const T pc = std::exp(r[c] - lse);
        (*d_logits)(b, c) = (pc - (static_cast<int>(c) == y ? T(1) : T(0))) * inv_b;
      }
    }
  }
  return total * inv_b;
}

template <typename T>
T loss_and_gradients(const Model<T>& model, std::span<const TokenizedSequence> batch,
                     std::span<const int> labels, const RuleSet& rs, std::vector<T>& grads,
                     std::size_t threads, std::vector<SequenceTrace<T>>* traces) {
  const std::size_t B = batch.size();
  if (B == 0 || labels.size() != B) throw Error(ErrorCode::kShape, "empty batch or label mismatch");
  const std::size_t P = model.layout.total;
  std::vector<SequenceTrace<T>> local(B);
  auto& tr = traces ? *traces : local;
  tr.resize(B);

  Matrix<T> logits(B, model.config.num_classes);
  for (std::size_t b = 0; b < B; ++b) {
    auto row = forward_sequence(model, batch[b], rs, ForwardOptions{}, &tr[b]);
    std::copy(row.begin(), row.end(), logits.row(b).begin());
  }
  Matrix<T> dlogits;
  const T loss = cross_entropy(logits, labels, &dlogits);

  std::vector<std::vector<T>> per_sample(B, std::vector<T>(P, T(0)));
  auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t b = first; b < B; b += step) {
      backward_sequence(model, tr[b], std::span<const T>(dlogits.row(b)),
                        std::span<T>(per_sample[b]));
    }
  };
  const std::size_t nt = std::max<std::size_t>(1, std::min(threads, B));
  if (nt == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(work, t, nt);
  }
  grads.assign(P, T(0));
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < P; ++i) grads[i] += per_sample[b][i];
  }
  return loss;
}

template <typename T>
double max_disallowed_probability(const SequenceTrace<T>& trace) {
  if (!trace.has_mask || trace.mask.kind != MaskKind::kHard) return 0.0;
  double worst = 0.0;
  const std::size_t n = trace.length;
  for (const auto& layer : trace.layers) {
    for (const auto& head : layer.attention.heads) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (trace.mask.at(i, j) == kMaskNeg) {
            worst = std::max(worst, static_cast<double>(head.probs(i, j)));
          }
        }
      }
    }
  }
  return worst;
}

#define GRAMATTN_INSTANTIATE(T)                                                                  \
  template Model<T> init_model<T>(const ModelConfig&, std::uint64_t);                            \
  template std::vector<T> forward_sequence<T>(const Model<T>&, const TokenizedSequence&,         \
                                              const RuleSet&, const ForwardOptions&,             \
                                              SequenceTrace<T>*);                                \
  template void backward_sequence<T>(const Model<T>&, const SequenceTrace<T>&,                   \
                                     std::span<const T>, std::span<T>);                          \
  template Matrix<T> forward<T>(const Model<T>&, std::span<const TokenizedSequence>,             \
                                const RuleSet&, const ForwardOptions&);                          \
  template T cross_entropy<T>(const Matrix<T>&, std::span<const int>, Matrix<T>*);               \
  template T loss_and_gradients<T>(const Model<T>&, std::span<const TokenizedSequence>,          \
                                   std::span<const int>, const RuleSet&, std::vector<T>&,        \
                                   std::size_t, std::vector<SequenceTrace<T>>*);                 \
  template double max_disallowed_probability<T>(const SequenceTrace<T>&);

GRAMATTN_INSTANTIATE(float)
GRAMATTN_INSTANTIATE(double)

#undef GRAMATTN_INSTANTIATE

}  // namespace gramattn
