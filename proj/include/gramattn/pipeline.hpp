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

#include <string>
#include <vector>

#include "gramattn/config.hpp"
#include "gramattn/mask.hpp"
#include "gramattn/train.hpp"

namespace gramattn {

// File-producing drivers behind the CLI subcommands. Every driver creates
// cfg.out_dir, writes run_config.ini there and places its outputs inside it.

enum class TagInput { kPlainText, kConllu, kJsonl };

struct TagResult {
  std::size_t sentences = 0;
  std::string output_path;
};

/// One sentence per line (plain text), CoNLL-U, or pre-tagged JSONL.
/// Writes tagged.jsonl. Throws Error(kInvalidArgument, "no sentences") on
/// empty input.
TagResult run_tag(const RunConfig& cfg, const std::string& input_path, TagInput format);

enum class MaskFormat { kCsv, kBinary };

/// Reads tagged JSONL, writes masks/mask_NNNNN.{csv,bin} and mask_stats.json.
/// Returns the stats document.
std::string run_mask(const RunConfig& cfg, const std::string& tagged_path, MaskKind kind,
                     MaskFormat format, bool sparse);

/// Writes checkpoint.bin, history.csv and metrics.json; returns metrics.json.
std::string run_train(const RunConfig& cfg);

/// Writes eval_metrics.json for `data_path` (TSV) and returns it.
std::string run_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                     const std::string& data_path);

/// Writes bench_report.json and density_histogram.csv; returns the report.
std::string run_bench(const RunConfig& cfg);

/// Attention probabilities per layer and head for `sentence`. Returns the
/// written file paths.
std::vector<std::string> run_viz_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path,
                                            const std::string& sentence);

/// Heatmap of a binary mask file.
std::vector<std::string> run_viz_mask(const RunConfig& cfg, const std::string& mask_path);

std::string metrics_json(const Metrics& m, Strategy strategy);
std::string mask_stats_json(const MaskStats& st);

/// Grayscale binary PGM, one pixel per cell, darker = larger value. Values
/// are mapped linearly from [lo, hi] onto [255, 0].
void write_heatmap_pgm(const std::string& path, std::size_t rows, std::size_t cols,
                       const std::vector<double>& values, double lo, double hi);
void write_matrix_csv(const std::string& path, std::size_t rows, std::size_t cols,
                      const std::vector<double>& values);

}  // namespace gramattn
