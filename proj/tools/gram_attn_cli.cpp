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

// gram-attn: command-line front end over the C library.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gramattn/gram_attn.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code(gram_status st) {
  switch (st) {
    case GRAM_OK: return kExitOk;
    case GRAM_ERR_NUMERIC: return kExitNumeric;
    case GRAM_ERR_INTERNAL: return kExitInternal;
    default: return kExitUsage;
  }
}

int report(gram_status st, char* doc) {
  if (st != GRAM_OK) {
    std::fprintf(stderr, "gram-attn: %s\n", gram_last_error());
    return exit_code(st);
  }
  if (doc) {
    std::fputs(doc, stdout);
    std::fputc('\n', stdout);
    gram_string_free(doc);
  }
  return kExitOk;
}

struct ConfigDeleter {
  void operator()(gram_config* c) const { gram_config_free(c); }
};
using ConfigPtr = std::unique_ptr<gram_config, ConfigDeleter>;

struct Globals {
  std::string config_file;
  std::string out_dir;
  std::vector<std::string> overrides;
  int threads = 0;
};

// Layering: defaults, config file, GRAM_ATTN_THREADS, --set, then flags.
gram_status build_config(const Globals& g, ConfigPtr& out) {
  gram_config* raw = nullptr;
  gram_status st = gram_config_create(&raw);
  if (st != GRAM_OK) return st;
  out.reset(raw);
  if (!g.config_file.empty() && (st = gram_config_load_file(raw, g.config_file.c_str())) != GRAM_OK) {
    return st;
  }
  if (const char* env = std::getenv("GRAM_ATTN_THREADS"); env && *env) {
    if ((st = gram_config_set(raw, "train.threads", env)) != GRAM_OK) return st;
  }
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "gram-attn: --set expects key=value, got '%s'\n", kv.c_str());
      return GRAM_ERR_INVALID_ARGUMENT;
    }
    st = gram_config_set(raw, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != GRAM_OK) return st;
  }
  if (g.threads > 0) {
    st = gram_config_set(raw, "train.threads", std::to_string(g.threads).c_str());
    if (st != GRAM_OK) return st;
  }
  if (!g.out_dir.empty()) return gram_config_set(raw, "paths.out", g.out_dir.c_str());
  return GRAM_OK;
}

gram_status set_if(gram_config* cfg, const char* key, const std::string& value) {
  if (value.empty()) return GRAM_OK;
  return gram_config_set(cfg, key, value.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grammar-constrained attention toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gram_version()));

  Globals g;
  app.add_option("-c,--config", g.config_file, "Config file ([section] key = value)");
  app.add_option("-o,--out", g.out_dir, "Output directory");
  app.add_option("--set", g.overrides, "Override a config key, e.g. --set train.epochs=1");
  app.add_option("--threads", g.threads, "Worker threads (also GRAM_ATTN_THREADS)")
      ->check(CLI::PositiveNumber);

  // tag
  auto* tag = app.add_subcommand("tag", "POS-tag and tokenize sentences into tagged JSONL");
  std::string tag_input, tag_format = "text";
  tag->add_option("input", tag_input, "Input file")->required();
  tag->add_option("--format", tag_format, "Input format")
      ->check(CLI::IsMember({"text", "conllu", "jsonl"}));

  // mask
  auto* mask = app.add_subcommand("mask", "Build grammatical masks from tagged JSONL");
  std::string mask_input, mask_kind = "hard", mask_format = "bin", mask_rules;
  bool mask_sparse = false;
  mask->add_option("input", mask_input, "Tagged JSONL file")->required();
  mask->add_option("--kind", mask_kind, "hard or soft")->check(CLI::IsMember({"hard", "soft"}));
  mask->add_option("--format", mask_format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
  mask->add_flag("--sparse", mask_sparse, "Store allowed key indices per row (hard only)");
  mask->add_option("--rules", mask_rules, "Rule file");

  // train
  auto* trn = app.add_subcommand("train", "Train the sentence classifier");
  std::string trn_strategy, trn_epochs, trn_seed, trn_train, trn_dev, trn_rules;
  trn->add_option("--strategy", trn_strategy, "none, hard or soft")
      ->check(CLI::IsMember({"none", "hard", "soft"}));
  trn->add_option("--epochs", trn_epochs, "Epochs");
  trn->add_option("--seed", trn_seed, "Random seed");
  trn->add_option("--train", trn_train, "Training TSV");
  trn->add_option("--dev", trn_dev, "Dev TSV");
  trn->add_option("--rules", trn_rules, "Rule file");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a TSV dataset");
  std::string ev_ckpt, ev_data, ev_rules;
  ev->add_option("checkpoint", ev_ckpt, "Checkpoint file")->required();
  ev->add_option("--data", ev_data, "TSV dataset (defaults to paths.dev)");
  ev->add_option("--rules", ev_rules, "Rule file");

  // bench
  auto* bench = app.add_subcommand("bench", "Mask density and attention timing report");
  std::string bench_sizes, bench_reps, bench_corpus;
  bench->add_option("--sizes", bench_sizes, "Comma-separated sequence lengths");
  bench->add_option("--repetitions", bench_reps, "Timed repetitions per measurement");
  bench->add_option("--corpus", bench_corpus, "TSV corpus for the density survey");

  // viz
  auto* viz = app.add_subcommand("viz", "Attention or mask heatmaps");
  std::string viz_ckpt, viz_sentence, viz_mask;
  auto* viz_ck_opt = viz->add_option("--checkpoint", viz_ckpt, "Checkpoint file");
  auto* viz_mask_opt = viz->add_option("--mask", viz_mask, "Binary mask file");
  viz->add_option("--sentence", viz_sentence, "Sentence to visualize")->needs(viz_ck_opt);
  viz_ck_opt->excludes(viz_mask_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  ConfigPtr cfg;
  gram_status st = build_config(g, cfg);
  if (st != GRAM_OK) return report(st, nullptr);
  char* doc = nullptr;

  if (*tag) {
    gram_tag_format f = tag_format == "conllu" ? GRAM_INPUT_CONLLU
                        : tag_format == "jsonl" ? GRAM_INPUT_JSONL
                                                : GRAM_INPUT_TEXT;
    st = gram_run_tag(cfg.get(), tag_input.c_str(), f, &doc);
    return report(st, doc);
  }
  if (*mask) {
    if ((st = set_if(cfg.get(), "paths.rules", mask_rules)) != GRAM_OK) return report(st, nullptr);
    st = gram_run_mask(cfg.get(), mask_input.c_str(), mask_kind == "soft" ? GRAM_MASK_SOFT : GRAM_MASK_HARD,
                       mask_format == "csv" ? GRAM_MASK_CSV : GRAM_MASK_BINARY, mask_sparse ? 1 : 0, &doc);
    return report(st, doc);
  }
  if (*trn) {
    const std::pair<const char*, const std::string*> sets[] = {
        {"model.strategy", &trn_strategy}, {"train.epochs", &trn_epochs}, {"train.seed", &trn_seed},
        {"paths.train", &trn_train},       {"paths.dev", &trn_dev},       {"paths.rules", &trn_rules}};
    for (const auto& [key, value] : sets) {
      if ((st = set_if(cfg.get(), key, *value)) != GRAM_OK) return report(st, nullptr);
    }
    st = gram_run_train(cfg.get(), &doc);
    return report(st, doc);
  }
  if (*ev) {
    if ((st = set_if(cfg.get(), "paths.rules", ev_rules)) != GRAM_OK) return report(st, nullptr);
    st = gram_run_eval(cfg.get(), ev_ckpt.c_str(), ev_data.empty() ? nullptr : ev_data.c_str(), &doc);
    return report(st, doc);
  }
  if (*bench) {
    if ((st = set_if(cfg.get(), "bench.sizes", bench_sizes)) != GRAM_OK ||
        (st = set_if(cfg.get(), "bench.repetitions", bench_reps)) != GRAM_OK ||
        (st = set_if(cfg.get(), "paths.train", bench_corpus)) != GRAM_OK) {
      return report(st, nullptr);
    }
    st = gram_run_bench(cfg.get(), &doc);
    return report(st, doc);
  }
  if (*viz) {
    if (!viz_mask.empty()) {
      st = gram_run_viz_mask(cfg.get(), viz_mask.c_str(), &doc);
      return report(st, doc);
    }
    if (viz_ckpt.empty() || viz_sentence.empty()) {
      std::fprintf(stderr, "gram-attn: viz needs --mask FILE or --checkpoint FILE --sentence TEXT\n");
      return kExitUsage;
    }
    st = gram_run_viz_checkpoint(cfg.get(), viz_ckpt.c_str(), viz_sentence.c_str(), &doc);
    return report(st, doc);
  }
  return kExitUsage;
}
