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

/* C interface to the gramattn library. Every function returns a gram_status;
 * on failure gram_last_error() describes the problem for the calling thread.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with gram_string_free(). */

#ifndef GRAMATTN_GRAM_ATTN_H_
#define GRAMATTN_GRAM_ATTN_H_

#include <stddef.h>

#if defined(GRAMATTN_BUILDING_LIBRARY)
#define GRAM_API __attribute__((visibility("default")))
#else
#define GRAM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gram_status {
  GRAM_OK = 0,
  GRAM_ERR_INVALID_ARGUMENT = 1,
  GRAM_ERR_PARSE = 2,
  GRAM_ERR_IO = 3,
  GRAM_ERR_ALIGNMENT = 4,
  GRAM_ERR_SHAPE = 5,
  GRAM_ERR_NUMERIC = 6,
  GRAM_ERR_INTERNAL = 7
} gram_status;

typedef enum gram_mask_kind { GRAM_MASK_HARD = 0, GRAM_MASK_SOFT = 1 } gram_mask_kind;
typedef enum gram_tag_format {
  GRAM_INPUT_TEXT = 0,
  GRAM_INPUT_CONLLU = 1,
  GRAM_INPUT_JSONL = 2
} gram_tag_format;
typedef enum gram_mask_format { GRAM_MASK_CSV = 0, GRAM_MASK_BINARY = 1 } gram_mask_format;

typedef struct gram_config gram_config;
typedef struct gram_ruleset gram_ruleset;
typedef struct gram_mask gram_mask;
typedef struct gram_classifier gram_classifier;

GRAM_API const char* gram_version(void);
/* Message for the last failed call on this thread; "" when none. */
GRAM_API const char* gram_last_error(void);
GRAM_API void gram_string_free(char* s);

/* Run configuration. Starts from the built-in defaults. */
GRAM_API gram_status gram_config_create(gram_config** out);
GRAM_API void gram_config_free(gram_config* cfg);
GRAM_API gram_status gram_config_load_file(gram_config* cfg, const char* path);
GRAM_API gram_status gram_config_load_text(gram_config* cfg, const char* text);
/* key is "section.key", e.g. "train.epochs". */
GRAM_API gram_status gram_config_set(gram_config* cfg, const char* key, const char* value);
/* Resolved configuration in INI form. */
GRAM_API gram_status gram_config_serialize(const gram_config* cfg, char** out);

/* Rule sets. */
GRAM_API gram_status gram_ruleset_default(gram_ruleset** out);
GRAM_API gram_status gram_ruleset_parse(const char* text, gram_ruleset** out);
GRAM_API gram_status gram_ruleset_load(const char* path, gram_ruleset** out);
GRAM_API void gram_ruleset_free(gram_ruleset* rs);
GRAM_API gram_status gram_ruleset_serialize(const gram_ruleset* rs, char** out);

/* Masks over a tag sequence given as tag names ("CLS", "DET", ...). */
GRAM_API gram_status gram_mask_build(const gram_ruleset* rs, const char* const* tags, size_t n,
                                     gram_mask_kind kind, gram_mask** out);
GRAM_API void gram_mask_free(gram_mask* m);
GRAM_API size_t gram_mask_length(const gram_mask* m);
/* Row-major length x length additive biases; valid until gram_mask_free. */
GRAM_API const float* gram_mask_data(const gram_mask* m);
/* Hard masks only. Any output pointer may be NULL. */
GRAM_API gram_status gram_mask_stats(const gram_mask* m, size_t* allowed_pairs, double* density,
                                     double* mean_connectivity);

/* Single-head scaled dot-product attention on row-major length x head_dim
 * inputs. mask may be NULL. probs (length x length) may be NULL. */
GRAM_API gram_status gram_attention_forward(const float* q, const float* k, const float* v,
                                            size_t length, size_t head_dim,
                                            const gram_mask* mask, float* out, float* probs);

/* Trained classifier loaded from a checkpoint. The config supplies vocab,
 * lexicon and rules. */
GRAM_API gram_status gram_classifier_load(const gram_config* cfg, const char* checkpoint_path,
                                          gram_classifier** out);
GRAM_API void gram_classifier_free(gram_classifier* c);
GRAM_API size_t gram_classifier_num_classes(const gram_classifier* c);
/* probs holds num_classes entries and may be NULL. */
GRAM_API gram_status gram_classifier_predict(const gram_classifier* c, const char* sentence,
                                             int* label, float* probs);

/* File-producing drivers. Outputs go to the configured output directory;
 * the returned document is the main JSON output of the run. */
GRAM_API gram_status gram_run_tag(const gram_config* cfg, const char* input_path,
                                  gram_tag_format format, char** summary_json);
GRAM_API gram_status gram_run_mask(const gram_config* cfg, const char* tagged_path,
                                   gram_mask_kind kind, gram_mask_format format, int sparse,
                                   char** stats_json);
GRAM_API gram_status gram_run_train(const gram_config* cfg, char** metrics_json);
GRAM_API gram_status gram_run_eval(const gram_config* cfg, const char* checkpoint_path,
                                   const char* data_path, char** metrics_json);
GRAM_API gram_status gram_run_bench(const gram_config* cfg, char** report_json);
GRAM_API gram_status gram_run_viz_checkpoint(const gram_config* cfg, const char* checkpoint_path,
                                             const char* sentence, char** files_json);
GRAM_API gram_status gram_run_viz_mask(const gram_config* cfg, const char* mask_path,
                                       char** files_json);

#ifdef __cplusplus
}
#endif

#endif  /* GRAMATTN_GRAM_ATTN_H_ */
