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

#include "gramattn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "gramattn/error.hpp"
#include "json.hpp"

namespace gramattn {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Times `fn`, repeated `inner` times per sample, reporting per-call microseconds.
template <typename Fn>
TimingStats measure(Fn&& fn, std::size_t reps, std::size_t warmup, std::size_t inner) {
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<double> samples;
  samples.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < inner; ++i) fn();
    const auto t1 = Clock::now();
    samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count() /
                      static_cast<double>(inner));
  }
  return {median_of(samples), percentile(samples, 0.95), reps};
}

Matrix<float> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  Matrix<float> m(r, c);
  for (float& v : m.data) v = d(rng);
  return m;
}

json stats_json(const TimingStats& s) {
  return {{"median_us", s.median_us}, {"p95_us", s.p95_us}, {"repetitions", s.repetitions}};
}

json flop_json(const FlopReport& f) {
  return {{"L", f.length},
          {"head_dim", f.head_dim},
          {"dense_pairs", f.dense_pairs},
          {"sparse_pairs", f.sparse_pairs},
          {"ratio", f.ratio},
          {"dense_score_macs", f.dense_score_macs},
          {"sparse_score_macs", f.sparse_score_macs},
          {"dense_value_macs", f.dense_value_macs},
          {"sparse_value_macs", f.sparse_value_macs}};
}

std::string environment_descriptor() {
  std::string env = "compiler=";
#if defined(__clang__)
  env += "clang " __clang_version__;
#elif defined(__GNUC__)
  env += "gcc " __VERSION__;
#else
  env += "unknown";
#endif
#ifdef NDEBUG
  env += "; build=release";
#else
  env += "; build=debug";
#endif
  env += "; hardware_threads=" + std::to_string(std::thread::hardware_concurrency());
  env += "; threads_used=1";
  return env;
}

}  // namespace

FlopReport flop_estimate(std::size_t length, std::size_t head_dim, const SparseMask& mask) {
  if (mask.length != length) {
    throw Error(ErrorCode::kShape, "sparse mask length " + std::to_string(mask.length) +
                                       " != L " + std::to_string(length));
  }
  FlopReport f;
  f.length = length;
  f.head_dim = head_dim;
  f.dense_pairs = static_cast<std::uint64_t>(length) * length;
  f.sparse_pairs = mask.nnz();
  f.ratio = f.dense_pairs ? static_cast<double>(f.sparse_pairs) / static_cast<double>(f.dense_pairs) : 0.0;
  f.dense_score_macs = f.dense_pairs * head_dim;
  f.sparse_score_macs = f.sparse_pairs * head_dim;
  f.dense_value_macs = f.dense_pairs * head_dim;
  f.sparse_value_macs = f.sparse_pairs * head_dim;
  return f;
}

DensityReport corpus_density(const std::vector<TaggedSentence>& sentences, const Vocab& vocab,
                             const RuleSet& rs, std::size_t max_len) {
  DensityReport r;
  r.histogram.assign(10, 0);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    try {
      const TokenizedSequence seq = encode_sequence(vocab, sentences[i], max_len);
      std::span<const PosTag> live(seq.tags.data(), seq.live_length);
      const MaskStats st = mask_stats(build_hard_mask(rs, live));
      r.densities.push_back(st.density);
      r.connectivity.push_back(st.mean_connectivity);
      r.lengths.push_back(seq.live_length);
      const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::ceil(st.density * 10.0)) - 1);
      ++r.histogram[bin];
    } catch (const Error& e) {
      ++r.skipped;
      r.errors.push_back("sentence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  r.sentences = r.densities.size();
  r.mean_density = mean_of(r.densities);
  r.median_density = median_of(r.densities);
  r.mean_connectivity = mean_of(r.connectivity);
  r.median_connectivity = median_of(r.connectivity);
  std::vector<double> lens(r.lengths.begin(), r.lengths.end());
  r.mean_length = mean_of(lens);
  return r;
}

void write_density_histogram_csv(std::ostream& os, const DensityReport& report) {
  os << "bin_low,bin_high,count\n";
  for (std::size_t b = 0; b < report.histogram.size(); ++b) {
    os << static_cast<double>(b) / 10.0 << ',' << static_cast<double>(b + 1) / 10.0 << ','
       << report.histogram[b] << '\n';
  }
}

std::vector<PosTag> tile_tags(const std::vector<std::vector<PosTag>>& samples, std::size_t length) {
  if (length < 2) throw Error(ErrorCode::kInvalidArgument, "tile length must be >= 2");
  std::vector<PosTag> body;
  for (const auto& s : samples)
    for (PosTag t : s)
      if (!is_special(t)) body.push_back(t);
  if (body.empty()) body.push_back(PosTag::NOUN);
  std::vector<PosTag> out{PosTag::CLS};
  for (std::size_t i = 0; out.size() + 1 < length; ++i) out.push_back(body[i % body.size()]);
  out.push_back(PosTag::SEP);
  return out;
}

TimingReport time_paths(const std::vector<std::size_t>& sizes, const RuleSet& rs,
                        const std::vector<std::vector<PosTag>>& samples,
                        const TimingOptions& opt) {
  if (opt.repetitions < 10) {
    throw Error(ErrorCode::kInvalidArgument, "timing needs at least 10 repetitions");
  }
  TimingReport rep;
  rep.head_dim = opt.head_dim;
  rep.repetitions = opt.repetitions;
  rep.warmup = opt.warmup;
  rep.environment = environment_descriptor();
  std::mt19937_64 rng(opt.seed);
  for (std::size_t L : sizes) {
    const auto tags = tile_tags(samples, L);
    const auto q = random_matrix(L, opt.head_dim, rng);
    const auto k = random_matrix(L, opt.head_dim, rng);
    const auto v = random_matrix(L, opt.head_dim, rng);
    const GrammaticalMask hard = build_hard_mask(rs, tags);
    const SparseMask sparse = to_sparse(hard);

    TimingBlock b;
    b.length = L;
    b.flops = flop_estimate(L, opt.head_dim, sparse);
    sparse_attention_forward(q, k, v, sparse, &b.sparse_counters);

    const std::size_t attn_inner = std::max<std::size_t>(1, 8192 / (L * 4));
    const std::size_t mask_inner = std::max<std::size_t>(4, 65536 / (L * L) * 4);
    volatile float sink = 0.0f;
    b.dense = measure([&] { sink = attention_forward<float>(q, k, v, nullptr).output.data[0]; },
                      opt.repetitions, opt.warmup, attn_inner);
    b.dense_masked = measure([&] { sink = attention_forward<float>(q, k, v, &hard).output.data[0]; },
                             opt.repetitions, opt.warmup, attn_inner);
    b.dense_with_generation = measure(
        [&] {
          const auto m = build_hard_mask(rs, tags);
          sink = attention_forward<float>(q, k, v, &m).output.data[0];
        },
        opt.repetitions, opt.warmup, attn_inner);
    b.sparse = measure([&] { sink = sparse_attention_forward<float>(q, k, v, sparse).data[0]; },
                       opt.repetitions, opt.warmup, attn_inner);
    b.hard_mask_build = measure([&] { sink = build_hard_mask(rs, tags).bias[0]; },
                                opt.repetitions, opt.warmup, mask_inner);
    b.soft_mask_build = measure([&] { sink = build_soft_mask(rs, tags).bias[0]; },
                                opt.repetitions, opt.warmup, mask_inner);
    (void)sink;
    rep.blocks.push_back(b);
  }
  return rep;
}

std::string bench_report_json(const DensityReport* density, const TimingReport* timing) {
  json doc = {{"schema_version", kBenchSchemaVersion}, {"kind", "gramattn-bench"}};
  if (density) {
    doc["density"] = {{"sentences", density->sentences},
                      {"skipped", density->skipped},
                      {"errors", density->errors},
                      {"mean_density", density->mean_density},
                      {"median_density", density->median_density},
                      {"mean_connectivity", density->mean_connectivity},
                      {"median_connectivity", density->median_connectivity},
                      {"mean_length", density->mean_length},
                      {"ratio", density->mean_density},
                      {"histogram", density->histogram}};
  }
  if (timing) {
    json blocks = json::array();
    for (const auto& b : timing->blocks) {
      blocks.push_back({{"L", b.length},
                        {"dense", stats_json(b.dense)},
                        {"dense_masked", stats_json(b.dense_masked)},
                        {"dense_with_generation", stats_json(b.dense_with_generation)},
                        {"sparse", stats_json(b.sparse)},
                        {"hard_mask_build", stats_json(b.hard_mask_build)},
                        {"soft_mask_build", stats_json(b.soft_mask_build)},
                        {"flops", flop_json(b.flops)},
                        {"sparse_counters",
                         {{"score_pairs", b.sparse_counters.score_pairs},
                          {"score_macs", b.sparse_counters.score_macs},
                          {"value_macs", b.sparse_counters.value_macs}}}});
    }
    doc["timing"] = {{"head_dim", timing->head_dim},
                     {"repetitions", timing->repetitions},
                     {"warmup", timing->warmup},
                     {"environment", timing->environment},
                     {"blocks", blocks}};
  }
  return doc.dump(2);
}

}  // namespace gramattn
