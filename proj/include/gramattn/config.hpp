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
#include <string_view>
#include <vector>

#include "gramattn/model.hpp"
#include "gramattn/train.hpp"

namespace gramattn {

// Fully merged run configuration: defaults <- config file <- overrides.
//
// Text form is `key = value` lines under `[section]` headers, e.g.
//
//   [model]
//   strategy = hard
//   [train]
//   epochs = 3
//
// Keys are addressed as "section.key" when overriding.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  bool vocab_size_from_vocab = true;  // "auto" in text form

  std::string rules_path;
  std::string vocab_path;
  std::string lexicon_path;
  std::string train_path;
  std::string dev_path;
  std::string out_dir = "out";

  std::vector<std::size_t> bench_sizes{32, 64, 128};
  std::size_t bench_repetitions = 30;
  std::size_t bench_head_dim = 64;
};

/// Paths point at the bundled assets.
RunConfig default_run_config();

/// Throws Error(kParse) with the line number on malformed input or unknown keys.
void apply_config_text(RunConfig& cfg, std::string_view text);
void apply_config_file(RunConfig& cfg, const std::string& path);

/// `key` is "section.key". Throws Error(kInvalidArgument) on unknown keys or
/// unparsable values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Fills vocab_size from the vocab file when requested and validates every
/// section. After this returns the config has no unset fields.
void resolve_run_config(RunConfig& cfg);

std::string serialize_run_config(const RunConfig& cfg);

}  // namespace gramattn
