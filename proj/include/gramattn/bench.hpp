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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gramattn/attention.hpp"
#include "gramattn/mask.hpp"
#include "gramattn/rules.hpp"
#include "gramattn/tokenize.hpp"

namespace gramattn {

inline constexpr int kBenchSchemaVersion = 1;

// Dense vs sparse cost for one mask. MAC counts are per head.
struct FlopReport {
  std::size_t length = 0;
  std::size_t head_dim = 0;
  std::uint64_t dense_pairs = 0;
  std::uint64_t sparse_pairs = 0;
  double ratio = 0.0;
  std::uint64_t dense_score_macs = 0;
  std::uint64_t sparse_score_macs = 0;
  std::uint64_t dense_value_macs = 0;
  std::uint64_t sparse_value_macs = 0;
};

/// Throws Error(kShape) when mask.length != length.
FlopReport flop_estimate(std::size_t length, std::size_t head_dim, const SparseMask& mask);

struct DensityReport {
  std::size_t sentences = 0;  // successfully measured
  std::size_t skipped = 0;
  std::vector<std::string> errors;
  std::vector<double> densities;      // per sentence, live region only
  std::vector<double> connectivity;   // per sentence C
  std::vector<std::size_t> lengths;   // per sentence live L
  double mean_density = 0.0, median_density = 0.0;
  double mean_connectivity = 0.0, median_connectivity = 0.0;
  double mean_length = 0.0;
  std::vector<std::size_t> histogram;  // 10 equal bins over (0, 1]
};

/// Hard-mask density over each sentence's live region.
DensityReport corpus_density(const std::vector<TaggedSentence>& sentences, const Vocab& vocab,
                             const RuleSet& rs, std::size_t max_len);

void write_density_histogram_csv(std::ostream& os, const DensityReport& report);

struct TimingStats {
  double median_us = 0.0;
  double p95_us = 0.0;
  std::size_t repetitions = 0;
};

struct TimingBlock {
  std::size_t length = 0;
  TimingStats dense;                  // no grammatical bias
  TimingStats dense_masked;           // prebuilt hard mask added to scores
  TimingStats dense_with_generation;  // hard mask rebuilt, then masked attention
  TimingStats sparse;
  TimingStats hard_mask_build;
  TimingStats soft_mask_build;
  FlopReport flops;
  OpCounters sparse_counters;  // from one instrumented sparse pass
};

struct TimingReport {
  std::size_t head_dim = 0;
  std::size_t repetitions = 0;
  std::size_t warmup = 0;
  std::vector<TimingBlock> blocks;
  std::string environment;
};

struct TimingOptions {
  std::size_t head_dim = 64;
  std::size_t repetitions = 30;
  std::size_t warmup = 3;
  std::uint64_t seed = 7;
};

/// Tag sequence of exactly `length` positions: [CLS], sample sentence tags
/// repeated in order, [SEP].
std::vector<PosTag> tile_tags(const std::vector<std::vector<PosTag>>& samples, std::size_t length);

/// Throws Error(kInvalidArgument) for fewer than 10 repetitions.
TimingReport time_paths(const std::vector<std::size_t>& sizes, const RuleSet& rs,
                        const std::vector<std::vector<PosTag>>& samples,
                        const TimingOptions& options);

/// Versioned report document. Either part may be null.
std::string bench_report_json(const DensityReport* density, const TimingReport* timing);

}  // namespace gramattn
