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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gramattn/bench.hpp"
#include "gramattn/config.hpp"
#include "gramattn/error.hpp"
#include "gramattn/pipeline.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "schema_check.hpp"

#ifndef GRAMATTN_TEST_SCHEMA_DIR
#define GRAMATTN_TEST_SCHEMA_DIR "schemas"
#endif

using namespace gramattn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<PosTag> kCatSat{PosTag::CLS, PosTag::DET, PosTag::NOUN, PosTag::VERB, PosTag::SEP};

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gramattn_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

RunConfig config_in(const fs::path& out) {
  RunConfig c = default_run_config();
  c.out_dir = out.string();
  resolve_run_config(c);
  return c;
}

std::vector<std::vector<double>> parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

struct Pgm {
  std::size_t width = 0, height = 0;
  std::vector<unsigned char> pixels;
};

Pgm parse_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int maxval = 0;
  Pgm p;
  in >> magic >> p.width >> p.height >> maxval;
  in.get();
  REQUIRE(magic == "P5");
  REQUIRE(maxval == 255);
  p.pixels.resize(p.width * p.height);
  in.read(reinterpret_cast<char*>(p.pixels.data()), static_cast<std::streamsize>(p.pixels.size()));
  REQUIRE(in.gcount() == static_cast<std::streamsize>(p.pixels.size()));
  return p;
}

json load_schema() {
  return json::parse(read_file(std::string(GRAMATTN_TEST_SCHEMA_DIR) + "/bench_report.schema.json"));
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("flop report for the reference mask") {
    const auto hard = build_hard_mask(default_ruleset(), kCatSat);
    const auto f = flop_estimate(5, 64, to_sparse(hard));
    CHECK(f.dense_pairs == 25);
    CHECK(f.sparse_pairs == 11);
    CHECK(f.ratio == mask_stats(hard).density);
    CHECK(f.sparse_score_macs == 11 * 64);
    CHECK(f.dense_value_macs == 25 * 64);
    CHECK_THROWS_AS(flop_estimate(6, 64, to_sparse(hard)), Error);
  }

  TEST_CASE("flop ratio extremes") {
    std::mt19937_64 rng(81);
    const auto full = to_sparse(build_hard_mask(all_pairs_ruleset(), oracle::random_tags(rng, 20)));
    CHECK(flop_estimate(20, 8, full).ratio == 1.0);
    const auto self = to_sparse(build_hard_mask(RuleSet{}, std::vector<PosTag>(128, PosTag::NOUN)));
    CHECK(flop_estimate(128, 8, self).ratio == 1.0 / 128.0);
  }

  TEST_CASE("property: flop ratio equals mask density exactly") {
    std::mt19937_64 rng(82);
    for (int n = 0; n < 200; ++n) {
      const std::size_t L = 1 + rng() % 64;
      const auto m = build_hard_mask(oracle::to_ruleset(oracle::random_rules(rng)), oracle::random_tags(rng, L));
      REQUIRE(flop_estimate(L, 16, to_sparse(m)).ratio == mask_stats(m).density);
    }
  }

  TEST_CASE("corpus density") {
    const Vocab v = load_vocab_file(testpaths::data("vocab.txt"));
    const Lexicon lex = load_lexicon_file(testpaths::data("lexicon.tsv"));
    const auto one = corpus_density({tag_sentence(lex, "the cat sat")}, v, default_ruleset(), 128);
    CHECK(one.sentences == 1);
    CHECK(one.mean_density == doctest::Approx(0.44).epsilon(1e-12));

    const std::vector<TaggedSentence> several{tag_sentence(lex, "the cat sat"),
                                              tag_sentence(lex, "the movie was not playing well")};
    const auto empty = corpus_density(several, v, RuleSet{}, 128);
    for (std::size_t i = 0; i < empty.densities.size(); ++i) {
      const double L = static_cast<double>(empty.lengths[i]);
      CHECK(empty.densities[i] == doctest::Approx((L + (L - 1.0)) / (L * L)).epsilon(1e-12));
    }
  }

  TEST_CASE("bundled corpus is sparse under the default rules") {
    const Vocab v = load_vocab_file(testpaths::data("vocab.txt"));
    const Lexicon lex = load_lexicon_file(testpaths::data("lexicon.tsv"));
    std::vector<TaggedSentence> s;
    for (const auto& ex : load_tsv_dataset(testpaths::data("train.tsv"))) s.push_back(tag_sentence(lex, ex.sentence));
    const auto r = corpus_density(s, v, default_ruleset(), 128);
    CHECK(r.sentences == 2000);
    CHECK(r.skipped == 0);
    CHECK(r.mean_density < 1.0);
    CHECK(r.mean_connectivity < 0.5 * r.mean_length);
    std::size_t total = 0;
    for (auto c : r.histogram) total += c;
    CHECK(total == r.sentences);
  }

  TEST_CASE("tiled tag sequences") {
    const auto t = tile_tags({{PosTag::CLS, PosTag::DET, PosTag::NOUN, PosTag::SEP}}, 7);
    const std::vector<PosTag> want{PosTag::CLS, PosTag::DET, PosTag::NOUN, PosTag::DET,
                                   PosTag::NOUN, PosTag::DET, PosTag::SEP};
    CHECK(t == want);
    CHECK_THROWS_AS(tile_tags({}, 1), Error);
  }

  TEST_CASE("timing report structure") {
    TimingOptions opt;
    opt.repetitions = 9;
    CHECK_THROWS_AS(time_paths({16}, default_ruleset(), {kCatSat}, opt), Error);
    opt.repetitions = 10;
    opt.head_dim = 16;
    const auto rep = time_paths({16, 24}, default_ruleset(), {kCatSat}, opt);
    REQUIRE(rep.blocks.size() == 2);
    for (const auto& b : rep.blocks) {
      CHECK(b.sparse_counters.score_pairs == b.flops.sparse_pairs);
      CHECK(b.sparse_counters.score_macs == b.flops.sparse_score_macs);
      CHECK(b.sparse_counters.value_macs == b.flops.sparse_value_macs);
      CHECK(b.dense.repetitions == 10);
      CHECK(b.hard_mask_build.median_us > 0.0);
    }
    DensityReport d;
    d.sentences = 1;
    d.densities = {0.44};
    d.mean_density = d.median_density = 0.44;
    d.histogram.assign(10, 0);
    d.histogram[4] = 1;
    const auto doc = json::parse(bench_report_json(&d, &rep));
    CHECK(schema::validate(doc, load_schema()).empty());
    CHECK(doc["schema_version"] == kBenchSchemaVersion);
    CHECK(doc["timing"]["blocks"].size() == 2);

    auto broken = doc;
    broken["timing"]["blocks"][0].erase("flops");
    CHECK_FALSE(schema::validate(broken, load_schema()).empty());
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults point at bundled assets") {
    RunConfig c = default_run_config();
    CHECK(fs::exists(c.rules_path));
    CHECK(fs::exists(c.vocab_path));
    CHECK(fs::exists(c.lexicon_path));
    CHECK(fs::exists(c.train_path));
    CHECK(fs::exists(c.dev_path));
    resolve_run_config(c);
    CHECK(c.model.vocab_size == load_vocab_file(c.vocab_path).size());
  }

  TEST_CASE("text form, overrides and errors") {
    RunConfig c = default_run_config();
    apply_config_text(c, "# comment\n[model]\nstrategy = hard\nlayers = 3\n\n[train]\nepochs = 7\nlearning_rate = 2e-5\n");
    CHECK(c.model.strategy == Strategy::kHard);
    CHECK(c.model.num_layers == 3);
    CHECK(c.train.epochs == 7);
    CHECK(c.train.learning_rate == 2e-5);
    set_config_value(c, "bench.sizes", "8,16");
    CHECK(c.bench_sizes == std::vector<std::size_t>{8, 16});
    set_config_value(c, "train.threads", "4");
    CHECK(c.train.threads == 4);

    try {
      apply_config_text(c, "[model]\nlayers = 2\nbogus = 1\n");
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(apply_config_text(c, "layers = 2\n"), Error);
    CHECK_THROWS_AS(set_config_value(c, "model.strategy", "medium"), Error);
    CHECK_THROWS_AS(set_config_value(c, "train.epochs", "three"), Error);
    CHECK_THROWS_AS(set_config_value(c, "nothing", "1"), Error);
  }

  TEST_CASE("serialized form reproduces the config") {
    RunConfig c = default_run_config();
    set_config_value(c, "model.strategy", "soft");
    set_config_value(c, "train.seed", "123");
    resolve_run_config(c);
    RunConfig back = default_run_config();
    apply_config_text(back, serialize_run_config(c));
    resolve_run_config(back);
    CHECK(serialize_run_config(back) == serialize_run_config(c));
    CHECK(back.model == c.model);
    CHECK(back.train == c.train);
  }

  TEST_CASE("resolve rejects bad values") {
    RunConfig c = default_run_config();
    c.bench_repetitions = 3;
    CHECK_THROWS_AS(resolve_run_config(c), Error);
    c = default_run_config();
    c.model.hidden = 7;
    CHECK_THROWS_AS(resolve_run_config(c), Error);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("tag plain text") {
    const auto dir = fresh_dir("tag");
    write(dir / "in.txt", "the cat sat\n\nthe movie was not playing well\n");
    const auto cfg = config_in(dir / "out");
    const auto r = run_tag(cfg, (dir / "in.txt").string(), TagInput::kPlainText);
    CHECK(r.sentences == 2);
    CHECK(fs::exists(dir / "out" / "run_config.ini"));
    std::istringstream lines(slurp(dir / "out" / "tagged.jsonl"));
    std::string first;
    std::getline(lines, first);
    const auto j = json::parse(first);
    CHECK(j["tags"] == json({"DET", "NOUN", "VERB"}));
    CHECK(j["token_tags"] == json({"CLS", "DET", "NOUN", "VERB", "SEP"}));
    CHECK(j["tokens"] == json({"[CLS]", "the", "cat", "sat", "[SEP]"}));
    CHECK(j["spans"][2] == json({4, 7}));
  }

  TEST_CASE("tag refuses empty input") {
    const auto dir = fresh_dir("tag_empty");
    write(dir / "in.txt", "\n  \n");
    try {
      run_tag(config_in(dir / "out"), (dir / "in.txt").string(), TagInput::kPlainText);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidArgument);
      CHECK(std::string(e.what()) == "no sentences");
    }
  }

  TEST_CASE("conllu input keeps its own tags") {
    const auto dir = fresh_dir("tag_conllu");
    write(dir / "in.conllu", "1\tthe\t_\tPRON\n2\tcat\t_\tPROPN\n3\tsat\t_\tADV\n\n");
    run_tag(config_in(dir / "out"), (dir / "in.conllu").string(), TagInput::kConllu);
    const auto j = json::parse(slurp(dir / "out" / "tagged.jsonl"));
    CHECK(j["tags"] == json({"PRON", "PROPN", "ADV"}));
  }

  TEST_CASE("mask files and stats") {
    const auto dir = fresh_dir("mask");
    write(dir / "in.txt", "the cat sat\n");
    auto cfg = config_in(dir / "out");
    run_tag(cfg, (dir / "in.txt").string(), TagInput::kPlainText);
    const auto tagged = (dir / "out" / "tagged.jsonl").string();

    const auto stats = json::parse(run_mask(cfg, tagged, MaskKind::kHard, MaskFormat::kCsv, false));
    CHECK(stats["per_sentence"][0]["density"].get<double>() == doctest::Approx(0.44));
    CHECK(stats["per_sentence"][0]["C"].get<double>() == doctest::Approx(2.2));
    std::ostringstream want;
    write_mask_csv(want, build_hard_mask(default_ruleset(), kCatSat));
    CHECK(slurp(dir / "out" / "masks" / "mask_00000.csv") == want.str());

    run_mask(cfg, tagged, MaskKind::kSoft, MaskFormat::kBinary, false);
    std::ifstream bin(dir / "out" / "masks" / "mask_00000.bin", std::ios::binary);
    CHECK(read_mask_binary(bin) == build_soft_mask(default_ruleset(), kCatSat));

    try {
      run_mask(cfg, tagged, MaskKind::kSoft, MaskFormat::kBinary, true);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()) == "sparse requires hard");
    }
  }

  TEST_CASE("mask viz csv and image encode the same matrix") {
    const auto dir = fresh_dir("viz_mask");
    std::ofstream(dir / "m.bin", std::ios::binary) << "";
    {
      std::ofstream os(dir / "m.bin", std::ios::binary);
      write_mask_binary(os, build_hard_mask(default_ruleset(), kCatSat));
    }
    const auto files = run_viz_mask(config_in(dir / "out"), (dir / "m.bin").string());
    REQUIRE(files.size() == 2);
    const auto csv = parse_csv(slurp(files[0]));
    const auto img = parse_pgm(slurp(files[1]));
    REQUIRE(img.width == 5);
    REQUIRE(img.height == 5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        // 0 (allowed) is the maximum -> black; -10000 -> white.
        CHECK(img.pixels[i * 5 + j] == (csv[i][j] == 0.0 ? 0 : 255));
      }
  }

  TEST_CASE("train, eval, viz and determinism on a small corpus") {
    const auto dir = fresh_dir("train");
    const auto rows = load_tsv_dataset(testpaths::data("train.tsv"));
    std::string train = "sentence\tlabel\n", dev = "sentence\tlabel\n";
    for (std::size_t i = 0; i < 40; ++i) train += rows[i].sentence + "\t" + std::to_string(rows[i].label) + "\n";
    for (std::size_t i = 40; i < 56; ++i) dev += rows[i].sentence + "\t" + std::to_string(rows[i].label) + "\n";
    write(dir / "train.tsv", train);
    write(dir / "dev.tsv", dev);

    auto make = [&](const std::string& out) {
      RunConfig c = default_run_config();
      c.train_path = (dir / "train.tsv").string();
      c.dev_path = (dir / "dev.tsv").string();
      c.out_dir = (dir / out).string();
      c.model.strategy = Strategy::kHard;
      c.train.epochs = 2;
      resolve_run_config(c);
      return c;
    };
    const auto metrics = json::parse(run_train(make("a")));
    run_train(make("b"));
    CHECK(metrics["strategy"] == "hard");
    for (const char* key : {"accuracy", "precision_macro", "recall_macro", "f1_macro", "precision_weighted",
                            "recall_weighted", "f1_weighted", "per_class", "confusion"})
      CHECK(metrics.contains(key));
    CHECK(slurp(dir / "a" / "history.csv") == slurp(dir / "b" / "history.csv"));
    CHECK(slurp(dir / "a" / "checkpoint.bin") == slurp(dir / "b" / "checkpoint.bin"));
    CHECK(slurp(dir / "a" / "metrics.json") == slurp(dir / "b" / "metrics.json"));
    CHECK(fs::exists(dir / "a" / "run_config.ini"));

    const auto ck = (dir / "a" / "checkpoint.bin").string();
    const auto ev = json::parse(run_eval(make("eval"), ck, (dir / "dev.tsv").string()));
    CHECK(ev["accuracy"] == metrics["accuracy"]);
    CHECK(ev["strategy"] == "hard");

    // Attention heatmaps: hard-blocked cells are exactly white.
    const auto files = run_viz_checkpoint(make("viz"), ck, "the cat sat");
    CHECK(files.size() == 2 * 2 * 2);
    const auto mask = build_hard_mask(default_ruleset(), kCatSat);
    for (std::size_t f = 0; f < files.size(); f += 2) {
      const auto probs = parse_csv(slurp(files[f]));
      const auto img = parse_pgm(slurp(files[f + 1]));
      REQUIRE(probs.size() == 5);
      for (std::size_t i = 0; i < 5; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
          sum += probs[i][j];
          if (mask.at(i, j) != 0.0f) {
            CHECK(probs[i][j] == 0.0);
            CHECK(img.pixels[i * 5 + j] == 255);
          }
          const auto px = static_cast<int>(std::lround(255.0 * (1.0 - probs[i][j])));
          CHECK(std::abs(static_cast<int>(img.pixels[i * 5 + j]) - px) <= 1);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      }
    }

    std::string longer;
    for (int i = 0; i < 200; ++i) longer += "cat ";
    CHECK_THROWS_AS(run_viz_checkpoint(make("viz2"), ck, longer), Error);
  }

  TEST_CASE("zero weights give uniform attention over live keys") {
    const auto dir = fresh_dir("viz_zero");
    RunConfig c = config_in(dir / "out");
    Checkpoint ck;
    ck.model_config = c.model;
    ck.train_config = c.train;
    ck.model = init_model<float>(c.model, 1);
    std::fill(ck.model.params.begin(), ck.model.params.end(), 0.0f);
    ck.adam.m.assign(ck.model.params.size(), 0.0f);
    ck.adam.v.assign(ck.model.params.size(), 0.0f);
    std::ostringstream rng_state;
    rng_state << std::mt19937_64(1);
    ck.rng_state = rng_state.str();
    save_checkpoint((dir / "zero.bin").string(), ck);
    const auto files = run_viz_checkpoint(c, (dir / "zero.bin").string(), "the cat sat on a mat");
    const auto probs = parse_csv(slurp(files[0]));
    for (const auto& row : probs)
      for (double p : row) CHECK(p == doctest::Approx(1.0 / static_cast<double>(row.size())).epsilon(1e-6));
  }

  TEST_CASE("metrics document carries the strategy") {
    const std::vector<int> y{0, 1};
    const auto j = json::parse(metrics_json(compute_metrics(y, y, 2), Strategy::kNone));
    CHECK(j["strategy"] == "none");
    CHECK(j["accuracy"] == 1.0);
  }
}
