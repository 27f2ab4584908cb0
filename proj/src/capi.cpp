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

#include "gramattn/gram_attn.h"

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "gramattn/attention.hpp"
#include "gramattn/config.hpp"
#include "gramattn/error.hpp"
#include "gramattn/mask.hpp"
#include "gramattn/pipeline.hpp"
#include "gramattn/rules.hpp"
#include "gramattn/train.hpp"
#include "json.hpp"

struct gram_config {
  gramattn::RunConfig cfg;
};

struct gram_ruleset {
  gramattn::RuleSet rs;
};

struct gram_mask {
  gramattn::GrammaticalMask mask;
};

struct gram_classifier {
  gramattn::Vocab vocab;
  gramattn::Lexicon lexicon;
  gramattn::RuleSet rules;
  gramattn::Model<float> model;
};

namespace {

thread_local std::string g_last_error;

gram_status status_for(gramattn::ErrorCode code) {
  using gramattn::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return GRAM_ERR_INVALID_ARGUMENT;
    case ErrorCode::kParse: return GRAM_ERR_PARSE;
    case ErrorCode::kIo: return GRAM_ERR_IO;
    case ErrorCode::kAlignment: return GRAM_ERR_ALIGNMENT;
    case ErrorCode::kShape: return GRAM_ERR_SHAPE;
    case ErrorCode::kNumeric: return GRAM_ERR_NUMERIC;
  }
  return GRAM_ERR_INTERNAL;
}

template <typename F>
gram_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return GRAM_OK;
  } catch (const gramattn::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GRAM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GRAM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GRAM_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw gramattn::Error(gramattn::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

gramattn::RunConfig resolved(const gram_config* cfg) {
  require(cfg != nullptr, "null config");
  gramattn::RunConfig c = cfg->cfg;
  gramattn::resolve_run_config(c);
  return c;
}

std::string files_json(const std::vector<std::string>& files) {
  return nlohmann::json(files).dump();
}

}  // namespace

extern "C" {

const char* gram_version(void) { return "0.1.0"; }

const char* gram_last_error(void) { return g_last_error.c_str(); }

void gram_string_free(char* s) { std::free(s); }

gram_status gram_config_create(gram_config** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    *out = new gram_config{gramattn::default_run_config()};
  });
}

void gram_config_free(gram_config* cfg) { delete cfg; }

gram_status gram_config_load_file(gram_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg && path, "null argument");
    gramattn::apply_config_file(cfg->cfg, path);
  });
}

gram_status gram_config_load_text(gram_config* cfg, const char* text) {
  return guarded([&] {
    require(cfg && text, "null argument");
    gramattn::apply_config_text(cfg->cfg, text);
  });
}

gram_status gram_config_set(gram_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "null argument");
    gramattn::set_config_value(cfg->cfg, key, value);
  });
}

gram_status gram_config_serialize(const gram_config* cfg, char** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    emit(out, gramattn::serialize_run_config(resolved(cfg)));
  });
}

gram_status gram_ruleset_default(gram_ruleset** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    *out = new gram_ruleset{gramattn::default_ruleset()};
  });
}

gram_status gram_ruleset_parse(const char* text, gram_ruleset** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = new gram_ruleset{gramattn::parse_ruleset(text)};
  });
}

gram_status gram_ruleset_load(const char* path, gram_ruleset** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new gram_ruleset{gramattn::load_ruleset_file(path)};
  });
}

void gram_ruleset_free(gram_ruleset* rs) { delete rs; }

gram_status gram_ruleset_serialize(const gram_ruleset* rs, char** out) {
  return guarded([&] {
    require(rs && out, "null argument");
    emit(out, gramattn::serialize_ruleset(rs->rs));
  });
}

gram_status gram_mask_build(const gram_ruleset* rs, const char* const* tags, size_t n,
                            gram_mask_kind kind, gram_mask** out) {
  return guarded([&] {
    require(rs && out && (tags || n == 0), "null argument");
    require(kind == GRAM_MASK_HARD || kind == GRAM_MASK_SOFT, "unknown mask kind");
    std::vector<gramattn::PosTag> seq;
    seq.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      require(tags[i] != nullptr, "null tag");
      seq.push_back(gramattn::parse_tag(tags[i]));
    }
    auto mk = kind == GRAM_MASK_HARD ? gramattn::MaskKind::kHard : gramattn::MaskKind::kSoft;
    *out = new gram_mask{gramattn::build_mask(mk, rs->rs, seq)};
  });
}

void gram_mask_free(gram_mask* m) { delete m; }

size_t gram_mask_length(const gram_mask* m) { return m ? m->mask.length : 0; }

const float* gram_mask_data(const gram_mask* m) { return m ? m->mask.bias.data() : nullptr; }

gram_status gram_mask_stats(const gram_mask* m, size_t* allowed_pairs, double* density,
                            double* mean_connectivity) {
  return guarded([&] {
    require(m != nullptr, "null mask");
    const auto st = gramattn::mask_stats(m->mask);
    if (allowed_pairs) *allowed_pairs = st.allowed_pairs;
    if (density) *density = st.density;
    if (mean_connectivity) *mean_connectivity = st.mean_connectivity;
  });
}

gram_status gram_attention_forward(const float* q, const float* k, const float* v, size_t length,
                                   size_t head_dim, const gram_mask* mask, float* out,
                                   float* probs) {
  return guarded([&] {
    require(q && k && v && out, "null argument");
    require(length > 0 && head_dim > 0, "length and head_dim must be positive");
    if (mask && mask->mask.length != length) {
      throw gramattn::Error(gramattn::ErrorCode::kShape, "mask length does not match inputs");
    }
    auto load = [&](const float* p) {
      gramattn::Matrix<float> m(length, head_dim);
      std::memcpy(m.data.data(), p, sizeof(float) * length * head_dim);
      return m;
    };
    const auto r = gramattn::attention_forward(load(q), load(k), load(v),
                                               mask ? &mask->mask : nullptr);
    std::memcpy(out, r.output.data.data(), sizeof(float) * r.output.data.size());
    if (probs) std::memcpy(probs, r.cache.probs.data.data(), sizeof(float) * length * length);
  });
}

gram_status gram_classifier_load(const gram_config* cfg, const char* checkpoint_path,
                                 gram_classifier** out) {
  return guarded([&] {
    require(checkpoint_path && out, "null argument");
    const auto c = resolved(cfg);
    auto ck = gramattn::load_checkpoint(checkpoint_path);
    *out = new gram_classifier{gramattn::load_vocab_file(c.vocab_path),
                               gramattn::load_lexicon_file(c.lexicon_path),
                               gramattn::load_ruleset_file(c.rules_path), std::move(ck.model)};
  });
}

void gram_classifier_free(gram_classifier* c) { delete c; }

size_t gram_classifier_num_classes(const gram_classifier* c) {
  return c ? c->model.config.num_classes : 0;
}

gram_status gram_classifier_predict(const gram_classifier* c, const char* sentence, int* label,
                                    float* probs) {
  return guarded([&] {
    require(c && sentence, "null argument");
    const auto tagged = gramattn::tag_sentence(c->lexicon, sentence);
    const auto seq = gramattn::encode_sequence(c->vocab, tagged, c->model.config.max_len);
    const auto logits = gramattn::forward_sequence(c->model, seq, c->rules, {}, nullptr);
    std::size_t best = 0;
    float mx = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) {
      if (logits[i] > logits[best]) best = i;
      mx = std::max(mx, logits[i]);
    }
    if (probs) {
      double sum = 0.0;
      for (float l : logits) sum += std::exp(static_cast<double>(l - mx));
      for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = static_cast<float>(std::exp(static_cast<double>(logits[i] - mx)) / sum);
      }
    }
    if (label) *label = static_cast<int>(best);
  });
}

gram_status gram_run_tag(const gram_config* cfg, const char* input_path, gram_tag_format format,
                         char** summary_json) {
  return guarded([&] {
    require(input_path != nullptr, "null input path");
    gramattn::TagInput in;
    switch (format) {
      case GRAM_INPUT_TEXT: in = gramattn::TagInput::kPlainText; break;
      case GRAM_INPUT_CONLLU: in = gramattn::TagInput::kConllu; break;
      case GRAM_INPUT_JSONL: in = gramattn::TagInput::kJsonl; break;
      default: throw gramattn::Error(gramattn::ErrorCode::kInvalidArgument, "unknown input format");
    }
    const auto r = gramattn::run_tag(resolved(cfg), input_path, in);
    emit(summary_json, nlohmann::json{{"sentences", r.sentences}, {"output", r.output_path}}.dump());
  });
}

gram_status gram_run_mask(const gram_config* cfg, const char* tagged_path, gram_mask_kind kind,
                          gram_mask_format format, int sparse, char** stats_json) {
  return guarded([&] {
    require(tagged_path != nullptr, "null input path");
    require(kind == GRAM_MASK_HARD || kind == GRAM_MASK_SOFT, "unknown mask kind");
    require(format == GRAM_MASK_CSV || format == GRAM_MASK_BINARY, "unknown mask format");
    emit(stats_json,
         gramattn::run_mask(resolved(cfg), tagged_path,
                            kind == GRAM_MASK_HARD ? gramattn::MaskKind::kHard : gramattn::MaskKind::kSoft,
                            format == GRAM_MASK_CSV ? gramattn::MaskFormat::kCsv : gramattn::MaskFormat::kBinary,
                            sparse != 0));
  });
}

gram_status gram_run_train(const gram_config* cfg, char** metrics_json) {
  return guarded([&] { emit(metrics_json, gramattn::run_train(resolved(cfg))); });
}

gram_status gram_run_eval(const gram_config* cfg, const char* checkpoint_path,
                          const char* data_path, char** metrics_json) {
  return guarded([&] {
    require(checkpoint_path != nullptr, "null checkpoint path");
    const auto c = resolved(cfg);
    emit(metrics_json, gramattn::run_eval(c, checkpoint_path, data_path ? data_path : c.dev_path));
  });
}

gram_status gram_run_bench(const gram_config* cfg, char** report_json) {
  return guarded([&] { emit(report_json, gramattn::run_bench(resolved(cfg))); });
}

gram_status gram_run_viz_checkpoint(const gram_config* cfg, const char* checkpoint_path,
                                    const char* sentence, char** files) {
  return guarded([&] {
    require(checkpoint_path && sentence, "null argument");
    emit(files, files_json(gramattn::run_viz_checkpoint(resolved(cfg), checkpoint_path, sentence)));
  });
}

gram_status gram_run_viz_mask(const gram_config* cfg, const char* mask_path, char** files) {
  return guarded([&] {
    require(mask_path != nullptr, "null mask path");
    emit(files, files_json(gramattn::run_viz_mask(resolved(cfg), mask_path)));
  });
}

}  // extern "C"
