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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "gramattn/gram_attn.h"
#include "json.hpp"

#ifndef GRAMATTN_TEST_DATA_DIR
#define GRAMATTN_TEST_DATA_DIR "data"
#endif

extern "C" int capi_c_reference_density(double* density);

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  gram_string_free(s);
  return out;
}

struct Config {
  gram_config* p = nullptr;
  Config() { REQUIRE(gram_config_create(&p) == GRAM_OK); }
  ~Config() { gram_config_free(p); }
  void set(const char* k, const std::string& v) { REQUIRE(gram_config_set(p, k, v.c_str()) == GRAM_OK); }
};

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gramattn_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* const kCatSat[] = {"CLS", "DET", "NOUN", "VERB", "SEP"};

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::string(gram_version()).size() > 0);
  gram_ruleset* rs = nullptr;
  CHECK(gram_ruleset_parse("DET -> ???\n", &rs) == GRAM_ERR_PARSE);
  CHECK(rs == nullptr);
  const std::string msg = gram_last_error();
  CHECK(msg.find("line 1") != std::string::npos);

  // Per thread.
  std::string other = "unset";
  std::thread([&] { other = gram_last_error(); }).join();
  CHECK(other.empty());

  REQUIRE(gram_ruleset_default(&rs) == GRAM_OK);
  CHECK(std::string(gram_last_error()).empty());
  gram_ruleset_free(rs);
}

TEST_CASE("null arguments are rejected, frees accept null") {
  CHECK(gram_ruleset_default(nullptr) == GRAM_ERR_INVALID_ARGUMENT);
  CHECK(gram_mask_build(nullptr, kCatSat, 5, GRAM_MASK_HARD, nullptr) == GRAM_ERR_INVALID_ARGUMENT);
  CHECK(gram_config_set(nullptr, "train.epochs", "1") == GRAM_ERR_INVALID_ARGUMENT);
  gram_config_free(nullptr);
  gram_ruleset_free(nullptr);
  gram_mask_free(nullptr);
  gram_classifier_free(nullptr);
  gram_string_free(nullptr);
}

TEST_CASE("header compiles as C") {
  double density = 0.0;
  CHECK(capi_c_reference_density(&density) == GRAM_OK);
  CHECK(density == doctest::Approx(0.44));
}

TEST_CASE("config round trip and errors") {
  Config c;
  c.set("train.epochs", "5");
  CHECK(gram_config_set(c.p, "train.epochs", "five") == GRAM_ERR_INVALID_ARGUMENT);
  CHECK(gram_config_set(c.p, "nope.key", "1") == GRAM_ERR_INVALID_ARGUMENT);
  CHECK(gram_config_load_text(c.p, "[train]\nseed = 9\n") == GRAM_OK);
  CHECK(gram_config_load_text(c.p, "[train]\nseed\n") == GRAM_ERR_PARSE);
  CHECK(gram_config_load_file(c.p, "/nonexistent/x.ini") == GRAM_ERR_IO);
  char* text = nullptr;
  REQUIRE(gram_config_serialize(c.p, &text) == GRAM_OK);
  const std::string s = take(text);
  CHECK(s.find("epochs = 5") != std::string::npos);
  CHECK(s.find("seed = 9") != std::string::npos);

  Config back;
  REQUIRE(gram_config_load_text(back.p, s.c_str()) == GRAM_OK);
  REQUIRE(gram_config_serialize(back.p, &text) == GRAM_OK);
  CHECK(take(text) == s);
}

TEST_CASE("rulesets and masks") {
  gram_ruleset* rs = nullptr;
  REQUIRE(gram_ruleset_default(&rs) == GRAM_OK);
  char* text = nullptr;
  REQUIRE(gram_ruleset_serialize(rs, &text) == GRAM_OK);
  gram_ruleset* again = nullptr;
  REQUIRE(gram_ruleset_parse(take(text).c_str(), &again) == GRAM_OK);
  gram_ruleset_free(again);
  gram_ruleset* loaded = nullptr;
  CHECK(gram_ruleset_load("/nonexistent/rules.txt", &loaded) == GRAM_ERR_IO);

  gram_mask* m = nullptr;
  REQUIRE(gram_mask_build(rs, kCatSat, 5, GRAM_MASK_HARD, &m) == GRAM_OK);
  CHECK(gram_mask_length(m) == 5);
  size_t pairs = 0;
  double density = 0.0, conn = 0.0;
  REQUIRE(gram_mask_stats(m, &pairs, &density, &conn) == GRAM_OK);
  CHECK(pairs == 11);
  CHECK(density == doctest::Approx(0.44));
  CHECK(conn == doctest::Approx(2.2));
  const float* d = gram_mask_data(m);
  CHECK(d[0] == 0.0f);                   // CLS -> CLS
  CHECK(d[2 * 5 + 4] == -10000.0f);      // NOUN -> SEP
  gram_mask_free(m);

  REQUIRE(gram_mask_build(rs, kCatSat, 5, GRAM_MASK_SOFT, &m) == GRAM_OK);
  CHECK(gram_mask_stats(m, nullptr, nullptr, nullptr) == GRAM_ERR_INVALID_ARGUMENT);
  gram_mask_free(m);

  const char* bad[] = {"CLS", "ADJECTIVE"};
  CHECK(gram_mask_build(rs, bad, 2, GRAM_MASK_HARD, &m) == GRAM_ERR_PARSE);
  gram_ruleset_free(rs);
}

TEST_CASE("attention through the C interface") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  const size_t L = 5, d = 4;
  std::vector<float> q(L * d), k(L * d), v(L * d), out(L * d), probs(L * L);
  for (auto* x : {&q, &k, &v})
    for (auto& e : *x) e = u(rng);

  gram_ruleset* rs = nullptr;
  gram_mask* m = nullptr;
  REQUIRE(gram_ruleset_default(&rs) == GRAM_OK);
  REQUIRE(gram_mask_build(rs, kCatSat, L, GRAM_MASK_HARD, &m) == GRAM_OK);
  REQUIRE(gram_attention_forward(q.data(), k.data(), v.data(), L, d, m, out.data(), probs.data()) == GRAM_OK);
  const float* bias = gram_mask_data(m);
  for (size_t i = 0; i < L; ++i) {
    double sum = 0.0;
    for (size_t j = 0; j < L; ++j) {
      sum += probs[i * L + j];
      if (bias[i * L + j] != 0.0f) CHECK(probs[i * L + j] <= 1e-6f);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
  }
  CHECK(gram_attention_forward(q.data(), k.data(), v.data(), 4, d, m, out.data(), nullptr) == GRAM_ERR_SHAPE);
  CHECK(gram_attention_forward(q.data(), k.data(), v.data(), L, d, nullptr, out.data(), nullptr) == GRAM_OK);
  gram_mask_free(m);
  gram_ruleset_free(rs);
}

TEST_CASE("drivers, classifier and string ownership") {
  const auto dir = fresh_dir("drivers");
  {
    std::ifstream train(std::string(GRAMATTN_TEST_DATA_DIR) + "/train.tsv");
    std::ofstream a(dir / "train.tsv"), b(dir / "dev.tsv");
    std::string line;
    for (int i = 0; i < 61 && std::getline(train, line); ++i) {
      if (i <= 40) a << line << "\n";
      if (i == 0 || i > 40) b << line << "\n";
    }
  }
  {
    std::ofstream(dir / "in.txt") << "the cat sat\n";
  }
  Config c;
  c.set("paths.out", (dir / "out").string());
  c.set("paths.train", (dir / "train.tsv").string());
  c.set("paths.dev", (dir / "dev.tsv").string());
  c.set("model.layers", "1");
  c.set("model.hidden", "16");
  c.set("model.heads", "2");
  c.set("model.ffn_dim", "32");
  c.set("model.strategy", "soft");
  c.set("train.epochs", "1");

  char* doc = nullptr;
  REQUIRE(gram_run_tag(c.p, (dir / "in.txt").string().c_str(), GRAM_INPUT_TEXT, &doc) == GRAM_OK);
  CHECK(json::parse(take(doc))["sentences"] == 1);
  CHECK(gram_run_tag(c.p, (dir / "missing.txt").string().c_str(), GRAM_INPUT_TEXT, &doc) == GRAM_ERR_IO);

  REQUIRE(gram_run_mask(c.p, (dir / "out" / "tagged.jsonl").string().c_str(), GRAM_MASK_HARD, GRAM_MASK_CSV, 0,
                        &doc) == GRAM_OK);
  CHECK(json::parse(take(doc))["mean_density"].get<double>() == doctest::Approx(0.44));
  CHECK(gram_run_mask(c.p, (dir / "out" / "tagged.jsonl").string().c_str(), GRAM_MASK_SOFT, GRAM_MASK_CSV, 1,
                      &doc) == GRAM_ERR_INVALID_ARGUMENT);

  REQUIRE(gram_run_train(c.p, &doc) == GRAM_OK);
  const auto metrics = json::parse(take(doc));
  CHECK(metrics["strategy"] == "soft");
  const auto ck = (dir / "out" / "checkpoint.bin").string();
  REQUIRE(gram_run_eval(c.p, ck.c_str(), nullptr, &doc) == GRAM_OK);
  CHECK(json::parse(take(doc))["accuracy"] == metrics["accuracy"]);

  gram_classifier* cls = nullptr;
  REQUIRE(gram_classifier_load(c.p, ck.c_str(), &cls) == GRAM_OK);
  CHECK(gram_classifier_num_classes(cls) == 2);
  // Classifier predictions reproduce the dev accuracy.
  std::ifstream dev(dir / "dev.tsv");
  std::string line;
  std::getline(dev, line);
  int correct = 0, total = 0;
  while (std::getline(dev, line)) {
    const auto tab = line.rfind('\t');
    int label = -1;
    float p[2] = {0, 0};
    REQUIRE(gram_classifier_predict(cls, line.substr(0, tab).c_str(), &label, p) == GRAM_OK);
    CHECK(p[0] + p[1] == doctest::Approx(1.0f));
    CHECK(p[label] >= p[1 - label]);
    correct += label == std::stoi(line.substr(tab + 1));
    ++total;
  }
  CHECK(static_cast<double>(correct) / total == doctest::Approx(metrics["accuracy"].get<double>()));
  gram_classifier_free(cls);
  CHECK(gram_classifier_load(c.p, (dir / "in.txt").string().c_str(), &cls) != GRAM_OK);

  REQUIRE(gram_run_viz_checkpoint(c.p, ck.c_str(), "the cat sat", &doc) == GRAM_OK);
  const auto files = json::parse(take(doc));
  CHECK(files.size() == 2 * 1 * 2);
  for (const auto& f : files) CHECK(fs::exists(f.get<std::string>()));

  c.set("train.learning_rate", "1e30");
  c.set("paths.out", (dir / "out_nan").string());
  CHECK(gram_run_train(c.p, &doc) == GRAM_ERR_NUMERIC);
  CHECK(std::string(gram_last_error()).find("step") != std::string::npos);
}
