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

// Central finite-difference checks (64-bit) for the attention kernels, the
// multi-head layer and the full classifier loss. Each returns the largest
// relative error between analytic and numeric derivatives.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gramattn/attention.hpp"
#include "gramattn/mask.hpp"
#include "gramattn/model.hpp"
#include "oracles.hpp"

namespace gradcheck {

using gramattn::Matrix;

inline constexpr double kStep = 1e-5;

// Relative error with a small absolute floor so entries that are zero
// analytically do not divide by zero.
inline double rel(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

inline double sum_product(const Matrix<double>& a, const Matrix<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// Perturbs every entry of `x` and compares d(loss)/dx with `analytic`.
inline double check_entries(std::vector<double>& x, const std::vector<double>& analytic,
                            const std::function<double()>& loss) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kStep;
    const double up = loss();
    x[i] = keep - kStep;
    const double down = loss();
    x[i] = keep;
    worst = std::max(worst, rel(analytic[i], (up - down) / (2.0 * kStep)));
  }
  return worst;
}

// Random tags of length L under the default rules; `masked` picks between a
// hard mask and no mask.
inline double attention(std::mt19937_64& rng, std::size_t L, std::size_t d, bool masked) {
  auto q = oracle::random_matrix<double>(rng, L, d);
  auto k = oracle::random_matrix<double>(rng, L, d);
  auto v = oracle::random_matrix<double>(rng, L, d);
  const auto r = oracle::random_matrix<double>(rng, L, d);
  const auto mask = gramattn::build_hard_mask(gramattn::default_ruleset(), oracle::random_tags(rng, L));
  const gramattn::GrammaticalMask* mp = masked ? &mask : nullptr;

  auto loss = [&] { return sum_product(gramattn::attention_forward(q, k, v, mp).output, r); };
  const auto fwd = gramattn::attention_forward(q, k, v, mp);
  const auto g = gramattn::attention_backward(fwd.cache, r);
  double worst = check_entries(q.data, g.dq.data, loss);
  worst = std::max(worst, check_entries(k.data, g.dk.data, loss));
  worst = std::max(worst, check_entries(v.data, g.dv.data, loss));
  return worst;
}

struct MultiHeadParams {
  Matrix<double> wq, wk, wv, wo;
  std::vector<double> bq, bk, bv, bo;

  static MultiHeadParams random(std::mt19937_64& rng, std::size_t hidden) {
    MultiHeadParams p;
    for (auto* m : {&p.wq, &p.wk, &p.wv, &p.wo}) *m = oracle::random_matrix<double>(rng, hidden, hidden, -0.5, 0.5);
    for (auto* b : {&p.bq, &p.bk, &p.bv, &p.bo}) *b = oracle::random_matrix<double>(rng, 1, hidden).data;
    return p;
  }

  gramattn::MultiHeadWeights<double> weights() const {
    return {wq.view(), wk.view(), wv.view(), wo.view(), bq, bk, bv, bo};
  }
};

inline double multi_head(std::mt19937_64& rng, std::size_t L, std::size_t hidden, std::size_t heads) {
  const gramattn::AttentionConfig cfg{heads, hidden / heads};
  auto p = MultiHeadParams::random(rng, hidden);
  auto x = oracle::random_matrix<double>(rng, L, hidden);
  const auto r = oracle::random_matrix<double>(rng, L, hidden);
  const auto mask = gramattn::build_hard_mask(gramattn::default_ruleset(), oracle::random_tags(rng, L));

  auto loss = [&] {
    return sum_product(gramattn::multi_head_forward(x, p.weights(), cfg, &mask, {}, nullptr), r);
  };
  gramattn::MultiHeadCache<double> cache;
  gramattn::multi_head_forward(x, p.weights(), cfg, &mask, {}, &cache);
  Matrix<double> gwq(hidden, hidden), gwk(hidden, hidden), gwv(hidden, hidden), gwo(hidden, hidden);
  std::vector<double> gbq(hidden), gbk(hidden), gbv(hidden), gbo(hidden);
  const gramattn::MultiHeadGrads<double> grads{gwq.view(), gwk.view(), gwv.view(), gwo.view(),
                                               gbq, gbk, gbv, gbo};
  const auto dx = gramattn::multi_head_backward(cache, p.weights(), cfg, r, grads);

  double worst = check_entries(x.data, dx.data, loss);
  worst = std::max(worst, check_entries(p.wq.data, gwq.data, loss));
  worst = std::max(worst, check_entries(p.wk.data, gwk.data, loss));
  worst = std::max(worst, check_entries(p.wv.data, gwv.data, loss));
  worst = std::max(worst, check_entries(p.wo.data, gwo.data, loss));
  worst = std::max(worst, check_entries(p.bq, gbq, loss));
  worst = std::max(worst, check_entries(p.bk, gbk, loss));
  worst = std::max(worst, check_entries(p.bv, gbv, loss));
  worst = std::max(worst, check_entries(p.bo, gbo, loss));
  return worst;
}

// Tiny classifier, two padded sequences, every parameter checked.
inline double model_loss(std::mt19937_64& rng, gramattn::Strategy strategy) {
  using namespace gramattn;
  ModelConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden = 8;
  cfg.num_heads = 2;
  cfg.ffn_dim = 16;
  cfg.vocab_size = 12;
  cfg.max_len = 9;
  cfg.num_classes = 2;
  cfg.strategy = strategy;
  auto model = init_model<double>(cfg, rng());
  // Scale weights up so attention is far from uniform and gradients are not tiny.
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (auto& w : model.params) w += u(rng);

  std::vector<TokenizedSequence> batch;
  std::vector<int> labels;
  for (int b = 0; b < 2; ++b) {
    const std::size_t live = 3 + rng() % (cfg.max_len - 3);
    TokenizedSequence s;
    const auto tags = oracle::random_tags(rng, live);
    for (std::size_t t = 0; t < cfg.max_len; ++t) {
      const bool pad = t >= live;
      s.ids.push_back(pad ? 0 : t == 0 ? 2 : t + 1 == live ? 3 : static_cast<std::int32_t>(4 + rng() % 8));
      s.tags.push_back(pad ? PosTag::PAD : t == 0 ? PosTag::CLS : t + 1 == live ? PosTag::SEP : tags[t]);
      s.pad.push_back(pad ? 1 : 0);
      s.spans.push_back({});
      s.word_index.push_back(-1);
    }
    s.live_length = live;
    s.pad_length = cfg.max_len - live;
    batch.push_back(s);
    labels.push_back(static_cast<int>(rng() % 2));
  }
  const RuleSet rs = default_ruleset();
  std::vector<double> grads, scratch;
  loss_and_gradients<double>(model, batch, labels, rs, grads);
  auto loss = [&] { return loss_and_gradients<double>(model, batch, labels, rs, scratch); };
  return check_entries(model.params, grads, loss);
}

}  // namespace gradcheck
