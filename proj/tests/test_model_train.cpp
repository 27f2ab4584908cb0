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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "gramattn/error.hpp"
#include "gramattn/model.hpp"
#include "gramattn/train.hpp"
#include "oracles.hpp"

using namespace gramattn;

namespace {

ModelConfig tiny_config(Strategy s = Strategy::kNone) {
  ModelConfig c;
  c.num_layers = 2;
  c.hidden = 16;
  c.num_heads = 2;
  c.ffn_dim = 32;
  c.vocab_size = 40;
  c.max_len = 12;
  c.num_classes = 2;
  c.strategy = s;
  return c;
}

TokenizedSequence random_sequence(std::mt19937_64& rng, const ModelConfig& c) {
  const std::size_t live = 3 + rng() % (c.max_len - 2);
  const auto tags = oracle::random_tags(rng, live);
  TokenizedSequence s;
  for (std::size_t t = 0; t < c.max_len; ++t) {
    const bool pad = t >= live;
    s.ids.push_back(pad ? 0 : t == 0 ? 2 : t + 1 == live ? 3 : static_cast<std::int32_t>(4 + rng() % (c.vocab_size - 4)));
    s.tags.push_back(pad ? PosTag::PAD : t == 0 ? PosTag::CLS : t + 1 == live ? PosTag::SEP : tags[t]);
    s.pad.push_back(pad ? 1 : 0);
    s.spans.push_back({});
    s.word_index.push_back(-1);
  }
  s.live_length = live;
  s.pad_length = c.max_len - live;
  return s;
}

const Corpus& bundled_train() {
  static const Corpus c = [] {
    const Vocab v = load_vocab_file(testpaths::data("vocab.txt"));
    const Lexicon lex = load_lexicon_file(testpaths::data("lexicon.tsv"));
    return encode_dataset(load_tsv_dataset(testpaths::data("train.tsv")), v, lex, 128);
  }();
  return c;
}

ModelConfig bundled_config(Strategy s) {
  ModelConfig c;
  c.vocab_size = load_vocab_file(testpaths::data("vocab.txt")).size();
  c.strategy = s;
  return c;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("parameter count of the default configuration") {
    // Closed form: V*h + P*h + layers*(4(h*h+h) + 2*2h + (h*f+f) + (f*h+h)) + h*c + c
    CHECK(parameter_count(ModelConfig{}) == 1461762);
  }

  TEST_CASE("layout is contiguous with unique names") {
    const auto l = ModelLayout::build(tiny_config());
    std::set<std::string> names;
    std::size_t next = 0;
    for (const auto& t : l.tensors) {
      CHECK(names.insert(t.name).second);
      CHECK(t.offset == next);
      next += t.size;
    }
    CHECK(next == l.total);
  }

  TEST_CASE("initialization") {
    const auto a = init_model<float>(tiny_config(), 5);
    const auto b = init_model<float>(tiny_config(), 5);
    const auto c = init_model<float>(tiny_config(), 6);
    CHECK(a.params == b.params);
    CHECK(a.params != c.params);
    for (const auto& t : a.layout.tensors) {
      const bool gamma = t.name.ends_with(".gamma");
      const bool bias = t.shape.size() == 1 && !gamma;
      for (std::size_t i = 0; i < t.size; ++i) {
        const float w = a.params[t.offset + i];
        if (gamma) {
          REQUIRE(w == 1.0f);
        } else if (bias) {
          REQUIRE(w == 0.0f);
        } else {
          REQUIRE(std::abs(w) <= 0.04f);
        }
      }
    }
  }

  TEST_CASE("config validation") {
    ModelConfig bad = tiny_config();
    bad.num_heads = 3;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = tiny_config();
    bad.num_layers = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("no mask equals hard masking with every pair allowed") {
    std::mt19937_64 rng(61);
    const auto none = init_model<float>(tiny_config(Strategy::kNone), 3);
    auto hard = none;
    hard.config.strategy = Strategy::kHard;
    std::vector<TokenizedSequence> batch;
    for (int i = 0; i < 6; ++i) batch.push_back(random_sequence(rng, none.config));
    const auto a = forward(none, std::span<const TokenizedSequence>(batch), default_ruleset());
    const auto b = forward(hard, std::span<const TokenizedSequence>(batch), all_pairs_ruleset());
    CHECK(a.rows == 6);
    CHECK(a.cols == 2);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(std::abs(a.data[i] - b.data[i]) <= 1e-6f);
  }

  TEST_CASE("batch order only permutes logits") {
    std::mt19937_64 rng(62);
    const auto m = init_model<float>(tiny_config(Strategy::kSoft), 4);
    std::vector<TokenizedSequence> batch;
    for (int i = 0; i < 5; ++i) batch.push_back(random_sequence(rng, m.config));
    auto rev = batch;
    std::reverse(rev.begin(), rev.end());
    const auto a = forward(m, std::span<const TokenizedSequence>(batch), default_ruleset());
    const auto b = forward(m, std::span<const TokenizedSequence>(rev), default_ruleset());
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t c = 0; c < 2; ++c) CHECK(a(i, c) == b(4 - i, c));
  }

  TEST_CASE("trimming padding does not change logits") {
    std::mt19937_64 rng(63);
    for (auto s : {Strategy::kNone, Strategy::kHard, Strategy::kSoft}) {
      auto m = init_model<double>(tiny_config(s), 9);
      for (auto& w : m.params) w *= 20.0;
      for (int n = 0; n < 10; ++n) {
        const auto seq = random_sequence(rng, m.config);
        ForwardOptions full;
        full.trim_padding = false;
        const auto a = forward_sequence(m, seq, default_ruleset(), ForwardOptions{}, nullptr);
        const auto b = forward_sequence(m, seq, default_ruleset(), full, nullptr);
        for (std::size_t c = 0; c < a.size(); ++c) CHECK(std::abs(a[c] - b[c]) <= 1e-9 * (1.0 + std::abs(a[c])));
      }
    }
  }

  TEST_CASE("cross entropy examples") {
    Matrix<double> z(1, 2);
    const int zero = 0;
    CHECK(cross_entropy(z, std::span<const int>(&zero, 1)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    z(0, 0) = 10.0;
    z(0, 1) = -10.0;
    CHECK(cross_entropy(z, std::span<const int>(&zero, 1)) == doctest::Approx(2.0611536e-9).epsilon(1e-6));
    const int bad = 2;
    CHECK_THROWS_AS(cross_entropy(z, std::span<const int>(&bad, 1)), Error);
  }

  TEST_CASE("cross entropy gradient") {
    std::mt19937_64 rng(64);
    auto z = oracle::random_matrix<double>(rng, 4, 3, -3.0, 3.0);
    const std::vector<int> y{0, 2, 1, 2};
    Matrix<double> g;
    cross_entropy(z, std::span<const int>(y), &g);
    const double h = 1e-5;
    for (std::size_t i = 0; i < z.data.size(); ++i) {
      const double keep = z.data[i];
      z.data[i] = keep + h;
      const double up = cross_entropy(z, std::span<const int>(y));
      z.data[i] = keep - h;
      const double down = cross_entropy(z, std::span<const int>(y));
      z.data[i] = keep;
      CHECK(gradcheck::rel(g.data[i], (up - down) / (2 * h)) <= 1e-6);
    }
  }

  TEST_CASE("finite differences: full model loss") {
    std::mt19937_64 rng(65);
    for (auto s : {Strategy::kNone, Strategy::kHard, Strategy::kSoft}) CHECK(gradcheck::model_loss(rng, s) <= 1e-4);
  }

  TEST_CASE("gradients do not depend on the thread count") {
    std::mt19937_64 rng(66);
    const auto m = init_model<float>(tiny_config(Strategy::kHard), 8);
    std::vector<TokenizedSequence> batch;
    std::vector<int> labels;
    for (int i = 0; i < 7; ++i) {
      batch.push_back(random_sequence(rng, m.config));
      labels.push_back(i % 2);
    }
    std::vector<float> g1, g3;
    const float l1 = loss_and_gradients<float>(m, batch, labels, default_ruleset(), g1, 1);
    const float l3 = loss_and_gradients<float>(m, batch, labels, default_ruleset(), g3, 3);
    CHECK(l1 == l3);
    CHECK(g1 == g3);
  }

  TEST_CASE("hard strategy leaks nothing at any layer") {
    std::mt19937_64 rng(67);
    auto m = init_model<float>(tiny_config(Strategy::kHard), 10);
    // Sharper than init but with score spreads far below the 1e4 sentinel.
    for (auto& w : m.params) w *= 3.0f;
    for (int n = 0; n < 20; ++n) {
      SequenceTrace<float> tr;
      forward_sequence(m, random_sequence(rng, m.config), default_ruleset(), ForwardOptions{}, &tr);
      CHECK(max_disallowed_probability(tr) <= 1e-6);
    }
  }
}

TEST_SUITE("train") {
  TEST_CASE("adamw: zero gradient without decay leaves parameters") {
    std::vector<double> p{1.0, -2.0, 3.0}, g(3, 0.0), m(3, 0.0), v(3, 0.0);
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    cfg.learning_rate = 0.1;
    adamw_step<double>(p, g, m, v, cfg, 1);
    CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
  }

  TEST_CASE("adamw: scalar reference step") {
    // m = 0.1, v = 0.001; bias-corrected both are 1, so the step is
    // lr * 1 / (1 + eps).
    std::vector<double> p{1.0}, g{1.0}, m{0.0}, v{0.0};
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    adamw_step<double>(p, g, m, v, cfg, 1);
    CHECK(std::abs(p[0] - 0.90000000099999999) <= 1e-15);
    CHECK(std::abs(m[0] - 0.1) <= 1e-15);
    CHECK(std::abs(v[0] - 0.001) <= 1e-15);
  }

  TEST_CASE("adamw: decoupled decay shrinks by (1 - lr*wd) per step") {
    std::vector<double> p{2.0}, g{0.0}, m{0.0}, v{0.0};
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.5;
    for (std::uint64_t s = 1; s <= 3; ++s) adamw_step<double>(p, g, m, v, cfg, s);
    CHECK(std::abs(p[0] - 2.0 * std::pow(0.95, 3)) <= 1e-15);
  }

  TEST_CASE("metrics: worked example") {
    const std::vector<int> pred{1, 0, 1}, gold{1, 1, 1};
    const auto m = compute_metrics(pred, gold, 2);
    CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));
    // Class 0 has no support: P=R=F1=0 by convention. Class 1: P=1, R=2/3, F1=0.8.
    CHECK(m.per_class[0].f1 == 0.0);
    CHECK(m.per_class[1].precision == 1.0);
    CHECK(m.per_class[1].recall == doctest::Approx(2.0 / 3.0));
    CHECK(m.per_class[1].f1 == doctest::Approx(0.8));
    CHECK(m.macro_f1 == doctest::Approx(0.4));
    CHECK(m.weighted_f1 == doctest::Approx(0.8));
    CHECK(m.confusion[1][0] == 1);
  }

  TEST_CASE("metrics: perfect predictions") {
    const std::vector<int> y{0, 1, 1, 0, 1};
    const auto m = compute_metrics(y, y, 2);
    CHECK(m.accuracy == 1.0);
    CHECK(m.macro_f1 == 1.0);
    CHECK(m.weighted_f1 == 1.0);
    CHECK(m.macro_precision == 1.0);
    CHECK(m.macro_recall == 1.0);
    CHECK(m.confusion[0][1] == 0);
    CHECK(m.confusion[1][0] == 0);
  }

  TEST_CASE("metrics: errors") {
    const std::vector<int> a{0, 1}, b{0};
    CHECK_THROWS_AS(compute_metrics(a, b, 2), Error);
    CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}, 2), Error);
    CHECK_THROWS_AS(compute_metrics(std::vector<int>{3}, std::vector<int>{0}, 2), Error);
  }

  TEST_CASE("property: metrics agree with direct recomputation") {
    std::mt19937_64 rng(71);
    for (int n = 0; n < 200; ++n) {
      const std::size_t N = 1 + rng() % 40, C = 2 + rng() % 3;
      std::vector<int> p(N), g(N);
      for (auto& x : p) x = static_cast<int>(rng() % C);
      for (auto& x : g) x = static_cast<int>(rng() % C);
      const auto m = compute_metrics(p, g, C);
      std::size_t trace = 0;
      for (std::size_t c = 0; c < C; ++c) trace += m.confusion[c][c];
      REQUIRE(m.accuracy == doctest::Approx(static_cast<double>(trace) / N));
      double wf = 0.0, mf = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < N; ++i) {
          tp += p[i] == static_cast<int>(c) && g[i] == static_cast<int>(c);
          fp += p[i] == static_cast<int>(c) && g[i] != static_cast<int>(c);
          fn += p[i] != static_cast<int>(c) && g[i] == static_cast<int>(c);
        }
        const double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        REQUIRE(m.per_class[c].f1 == doctest::Approx(f1));
        wf += f1 * static_cast<double>(tp + fn);
        mf += f1;
      }
      REQUIRE(m.weighted_f1 == doctest::Approx(wf / N));
      REQUIRE(m.macro_f1 == doctest::Approx(mf / C));
    }
  }

  TEST_CASE("bundled corpus encodes without loss") {
    const auto& c = bundled_train();
    CHECK(c.examples.size() == 2000);
    CHECK(c.skipped == 0);
  }

  TEST_CASE("overfits a handful of sentences") {
    const auto& c = bundled_train();
    const std::vector<Example> tiny(c.examples.begin(), c.examples.begin() + 16);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 16;
    tc.seed = 3;
    Trainer t(bundled_config(Strategy::kHard), tc, default_ruleset());
    double loss = 0.0;
    for (int step = 0; step < 200; ++step) loss = t.train_step(tiny);
    const auto m = evaluate(t.model(), tiny, default_ruleset());
    CHECK(m.accuracy == 1.0);
    CHECK(loss < 0.1);
  }

  TEST_CASE("non-finite loss names the step") {
    const auto& c = bundled_train();
    const std::vector<Example> few(c.examples.begin(), c.examples.begin() + 4);
    TrainConfig tc;
    tc.batch_size = 2;
    Trainer t(bundled_config(Strategy::kNone), tc, default_ruleset());
    t.train_step(std::span<const Example>(few).subspan(0, 2));
    Checkpoint ck = t.checkpoint();
    const auto& cls = ck.model.layout.tensors.back();
    ck.model.params[cls.offset] = std::nanf("");
    Trainer broken(ck, default_ruleset());
    try {
      broken.train_step(std::span<const Example>(few).subspan(2, 2));
      FAIL("expected numeric error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNumeric);
      CHECK(std::string(e.what()).find("step 2") != std::string::npos);
    }
  }

  TEST_CASE("train config validation") {
    TrainConfig tc;
    tc.batch_size = 0;
    CHECK_THROWS_AS(tc.validate(), Error);
    tc = TrainConfig{};
    tc.learning_rate = -1.0;
    CHECK_THROWS_AS(tc.validate(), Error);
  }

  TEST_CASE("identical seeds give identical histories; resume is exact") {
    const auto& c = bundled_train();
    const std::vector<Example> train(c.examples.begin(), c.examples.begin() + 48);
    const std::vector<Example> dev(c.examples.begin() + 48, c.examples.begin() + 64);
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 9;
    tc.check_leakage = true;
    const auto mc = bundled_config(Strategy::kHard);

    const auto a = gramattn::train(mc, tc, default_ruleset(), train, dev);
    const auto b = gramattn::train(mc, tc, default_ruleset(), train, dev);
    REQUIRE(a.history.size() == 2);
    std::ostringstream ha, hb;
    write_history_csv(ha, a.history);
    write_history_csv(hb, b.history);
    CHECK(ha.str() == hb.str());
    CHECK(a.checkpoint.model.params == b.checkpoint.model.params);

    // One epoch, checkpoint through bytes, one more epoch.
    TrainConfig one = tc;
    one.epochs = 1;
    const auto first = gramattn::train(mc, one, default_ruleset(), train, dev);
    std::stringstream bytes;
    Checkpoint ck = first.checkpoint;
    ck.train_config.epochs = 2;
    write_checkpoint(bytes, ck);
    const Checkpoint back = read_checkpoint(bytes);
    CHECK(back.model.params == ck.model.params);
    CHECK(back.adam.m == ck.adam.m);
    CHECK(back.adam.v == ck.adam.v);
    CHECK(back.adam.step == ck.adam.step);
    CHECK(back.rng_state == ck.rng_state);
    CHECK(back.model_config == ck.model_config);
    CHECK(back.train_config == ck.train_config);
    Trainer resumed(back, default_ruleset());
    const auto rec = resumed.run_epoch(train, dev);
    CHECK(rec.epoch == 2);
    CHECK(rec.mean_loss == a.history[1].mean_loss);
    CHECK(resumed.model().params == a.checkpoint.model.params);
  }

  TEST_CASE("checkpoint reader rejects damaged files") {
    std::stringstream junk("GACKPT01garbage");
    CHECK_THROWS_AS(read_checkpoint(junk), Error);
    std::stringstream wrong("NOTACKPT");
    CHECK_THROWS_AS(read_checkpoint(wrong), Error);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), Error);
  }
}
