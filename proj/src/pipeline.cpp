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

#include "gramattn/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gramattn/bench.hpp"
#include "gramattn/error.hpp"
#include "json.hpp"

namespace gramattn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path prepare_out(const RunConfig& cfg) {
  fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory '" + cfg.out_dir + "'");
  std::ofstream os(out / "run_config.ini", std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write run_config.ini");
  os << serialize_run_config(cfg);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  os << text;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

json metrics_to_json(const Metrics& m) {
  json per_class = json::array();
  for (const auto& c : m.per_class) {
    per_class.push_back({{"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1},
                         {"support", c.support}});
  }
  return {{"samples", m.samples},
          {"accuracy", m.accuracy},
          {"precision_macro", m.macro_precision},
          {"recall_macro", m.macro_recall},
          {"f1_macro", m.macro_f1},
          {"precision_weighted", m.weighted_precision},
          {"recall_weighted", m.weighted_recall},
          {"f1_weighted", m.weighted_f1},
          {"per_class", per_class},
          {"confusion", m.confusion}};
}

std::string pad_index(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return buf;
}

// Tags for the live region of one tagged JSONL record.
std::vector<PosTag> record_tags(const json& obj, const Vocab* vocab, std::size_t max_len) {
  if (obj.contains("token_tags")) {
    std::vector<PosTag> tags;
    for (const auto& t : obj["token_tags"]) tags.push_back(parse_tag(t.get<std::string>()));
    return tags;
  }
  if (!vocab) throw Error(ErrorCode::kInvalidArgument, "record lacks token_tags and no vocab is loaded");
  auto sentences = read_tagged_jsonl(obj.dump());
  auto seq = encode_sequence(*vocab, sentences.at(0), max_len);
  return {seq.tags.begin(), seq.tags.begin() + static_cast<std::ptrdiff_t>(seq.live_length)};
}

}  // namespace

std::string metrics_json(const Metrics& m, Strategy strategy) {
  json j = metrics_to_json(m);
  j["strategy"] = strategy_name(strategy);
  return j.dump(2);
}

std::string mask_stats_json(const MaskStats& st) {
  return json{{"L", st.length},
              {"allowed_pairs", st.allowed_pairs},
              {"density", st.density},
              {"C", st.mean_connectivity},
              {"row_histogram", st.row_histogram}}
      .dump(2);
}

void write_matrix_csv(const std::string& path, std::size_t rows, std::size_t cols,
                      const std::vector<double>& values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  char buf[40];
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", values[i * cols + j]);
      if (j) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

void write_heatmap_pgm(const std::string& path, std::size_t rows, std::size_t cols,
                       const std::vector<double>& values, double lo, double hi) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  os << "P5\n" << cols << ' ' << rows << "\n255\n";
  const double range = hi - lo;
  for (std::size_t i = 0; i < rows * cols; ++i) {
    double t = range > 0.0 ? (values[i] - lo) / range : 1.0;
    t = std::clamp(t, 0.0, 1.0);
    const auto px = static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)));
    os.put(static_cast<char>(px));
  }
}

TagResult run_tag(const RunConfig& cfg, const std::string& input_path, TagInput format) {
  const std::string text = read_file(input_path);
  const Vocab vocab = load_vocab_file(cfg.vocab_path);

  std::vector<TaggedSentence> sentences;
  std::vector<std::string> diagnostics;
  switch (format) {
    case TagInput::kConllu:
      sentences = ingest_conllu(text);
      break;
    case TagInput::kJsonl:
      sentences = read_tagged_jsonl(text);
      break;
    case TagInput::kPlainText: {
      const Lexicon lexicon = load_lexicon_file(cfg.lexicon_path);
      for (auto line : lines_of(text)) {
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        sentences.push_back(tag_sentence(lexicon, line));
      }
      break;
    }
  }
  if (sentences.empty()) throw Error(ErrorCode::kInvalidArgument, "no sentences");

  const fs::path out = prepare_out(cfg);
  std::ostringstream body;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    try {
      const TokenizedSequence seq = encode_sequence(vocab, s, cfg.model.max_len);
      json words = json::array(), tags = json::array(), tokens = json::array(),
           token_tags = json::array(), spans = json::array();
      for (const auto& w : s.words) {
        words.push_back(w.text);
        tags.push_back(tag_name(w.pos));
      }
      for (std::size_t t = 0; t < seq.live_length; ++t) {
        tokens.push_back(vocab.token(seq.ids[t]));
        token_tags.push_back(tag_name(seq.tags[t]));
        spans.push_back({seq.spans[t].start, seq.spans[t].end});
      }
      body << json{{"sentence", s.text}, {"words", words},         {"tags", tags},
                   {"tokens", tokens},   {"token_tags", token_tags}, {"spans", spans}}
                  .dump()
           << '\n';
    } catch (const Error& e) {
      diagnostics.push_back("sentence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (!diagnostics.empty()) {
    std::string msg;
    for (const auto& d : diagnostics) msg += d + "\n";
    throw Error(ErrorCode::kAlignment, msg);
  }
  write_text(out / "tagged.jsonl", body.str());
  return {sentences.size(), (out / "tagged.jsonl").string()};
}

std::string run_mask(const RunConfig& cfg, const std::string& tagged_path, MaskKind kind,
                     MaskFormat format, bool sparse) {
  if (sparse && kind != MaskKind::kHard) {
    throw Error(ErrorCode::kInvalidArgument, "sparse requires hard");
  }
  const RuleSet rs = load_ruleset_file(cfg.rules_path);
  const std::string text = read_file(tagged_path);
  std::unique_ptr<Vocab> vocab;

  std::vector<std::vector<PosTag>> all_tags;
  std::size_t line_no = 0;
  for (auto line : lines_of(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const json obj = json::parse(line);
      if (!obj.contains("token_tags") && !vocab) {
        vocab = std::make_unique<Vocab>(load_vocab_file(cfg.vocab_path));
      }
      all_tags.push_back(record_tags(obj, vocab.get(), cfg.model.max_len));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (all_tags.empty()) throw Error(ErrorCode::kInvalidArgument, "no sentences");

  const fs::path out = prepare_out(cfg);
  fs::create_directories(out / "masks");
  json per = json::array();
  double density_sum = 0.0, c_sum = 0.0;
  for (std::size_t i = 0; i < all_tags.size(); ++i) {
    const auto& tags = all_tags[i];
    const GrammaticalMask mask = build_mask(kind, rs, tags);
    const MaskStats hard_stats = mask_stats(kind == MaskKind::kHard ? mask : build_hard_mask(rs, tags));
    const fs::path base = out / "masks" / ("mask_" + pad_index(i));
    if (format == MaskFormat::kCsv) {
      std::ofstream os(base.string() + ".csv", std::ios::binary);
      if (sparse) {
        const SparseMask s = to_sparse(mask);
        for (std::size_t r = 0; r < s.length; ++r) {
          os << r << ',';
          auto row = s.row(r);
          for (std::size_t k = 0; k < row.size(); ++k) os << (k ? " " : "") << row[k];
          os << '\n';
        }
      } else {
        write_mask_csv(os, mask);
      }
    } else {
      std::ofstream os(base.string() + ".bin", std::ios::binary);
      if (sparse) {
        write_mask_binary(os, to_sparse(mask));
      } else {
        write_mask_binary(os, mask);
      }
    }
    json entry = {{"index", i},
                  {"L", hard_stats.length},
                  {"allowed_pairs", hard_stats.allowed_pairs},
                  {"density", hard_stats.density},
                  {"C", hard_stats.mean_connectivity}};
    if (kind == MaskKind::kSoft) {
      std::size_t biased = 0;
      for (float b : mask.bias) biased += b != 0.0f;
      entry["biased_pairs"] = biased;
    }
    per.push_back(entry);
    density_sum += hard_stats.density;
    c_sum += hard_stats.mean_connectivity;
  }
  const double n = static_cast<double>(all_tags.size());
  const json stats = {{"kind", kind == MaskKind::kHard ? "hard" : "soft"},
                      {"sentences", all_tags.size()},
                      {"mean_density", density_sum / n},
                      {"mean_C", c_sum / n},
                      {"per_sentence", per}};
  const std::string doc = stats.dump(2);
  write_text(out / "mask_stats.json", doc);
  return doc;
}

namespace {

struct LoadedData {
  Vocab vocab;
  Lexicon lexicon;
  RuleSet rules;
};

LoadedData load_assets(const RunConfig& cfg) {
  return {load_vocab_file(cfg.vocab_path), load_lexicon_file(cfg.lexicon_path),
          load_ruleset_file(cfg.rules_path)};
}

Corpus load_corpus(const std::string& path, const LoadedData& d, std::size_t max_len) {
  Corpus c = encode_dataset(load_tsv_dataset(path), d.vocab, d.lexicon, max_len);
  if (c.examples.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset '" + path + "' has no usable sentences");
  return c;
}

}  // namespace

std::string run_train(const RunConfig& cfg) {
  const LoadedData d = load_assets(cfg);
  if (cfg.model.vocab_size < d.vocab.size()) {
    throw Error(ErrorCode::kInvalidArgument, "model.vocab_size is smaller than the vocab file");
  }
  const Corpus train_set = load_corpus(cfg.train_path, d, cfg.model.max_len);
  const Corpus dev_set = load_corpus(cfg.dev_path, d, cfg.model.max_len);
  const fs::path out = prepare_out(cfg);

  const TrainResult r = train(cfg.model, cfg.train, d.rules, train_set.examples, dev_set.examples);
  save_checkpoint((out / "checkpoint.bin").string(), r.checkpoint);
  {
    std::ofstream os(out / "history.csv", std::ios::binary);
    write_history_csv(os, r.history);
  }
  json j = metrics_to_json(r.history.back().dev);
  j["strategy"] = strategy_name(cfg.model.strategy);
  j["seed"] = cfg.train.seed;
  j["epochs"] = cfg.train.epochs;
  j["steps"] = r.checkpoint.adam.step;
  j["final_train_loss"] = r.history.back().mean_loss;
  j["train_skipped"] = train_set.skipped;
  j["dev_skipped"] = dev_set.skipped;
  const std::string doc = j.dump(2);
  write_text(out / "metrics.json", doc);
  return doc;
}

std::string run_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                     const std::string& data_path) {
  const LoadedData d = load_assets(cfg);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const Corpus data = load_corpus(data_path, d, ck.model_config.max_len);
  const fs::path out = prepare_out(cfg);
  json j = metrics_to_json(evaluate(ck.model, data.examples, d.rules));
  j["strategy"] = strategy_name(ck.model_config.strategy);
  j["skipped"] = data.skipped;
  const std::string doc = j.dump(2);
  write_text(out / "eval_metrics.json", doc);
  return doc;
}

std::string run_bench(const RunConfig& cfg) {
  const LoadedData d = load_assets(cfg);
  const auto rows = load_tsv_dataset(cfg.train_path);
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "bench corpus is empty");
  std::vector<TaggedSentence> tagged;
  tagged.reserve(rows.size());
  for (const auto& r : rows) tagged.push_back(tag_sentence(d.lexicon, r.sentence));
  const DensityReport density = corpus_density(tagged, d.vocab, d.rules, cfg.model.max_len);

  std::vector<std::vector<PosTag>> samples;
  for (std::size_t i = 0; i < tagged.size() && samples.size() < 64; ++i) {
    try {
      auto seq = encode_sequence(d.vocab, tagged[i], cfg.model.max_len);
      samples.emplace_back(seq.tags.begin(), seq.tags.begin() + static_cast<std::ptrdiff_t>(seq.live_length));
    } catch (const Error&) {
    }
  }
  TimingOptions opt;
  opt.head_dim = cfg.bench_head_dim;
  opt.repetitions = cfg.bench_repetitions;
  opt.seed = cfg.train.seed;
  const TimingReport timing = time_paths(cfg.bench_sizes, d.rules, samples, opt);

  const fs::path out = prepare_out(cfg);
  const std::string doc = bench_report_json(&density, &timing);
  write_text(out / "bench_report.json", doc);
  std::ofstream os(out / "density_histogram.csv", std::ios::binary);
  write_density_histogram_csv(os, density);
  return doc;
}

std::vector<std::string> run_viz_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path,
                                            const std::string& sentence) {
  const LoadedData d = load_assets(cfg);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const TaggedSentence tagged = tag_sentence(d.lexicon, sentence);
  const auto pieces = tokenize_with_offsets(d.vocab, tagged.text);
  if (pieces.size() + 2 > ck.model_config.max_len) {
    throw Error(ErrorCode::kInvalidArgument, "sentence has " + std::to_string(pieces.size() + 2) +
                                                 " tokens, longer than max_len " +
                                                 std::to_string(ck.model_config.max_len));
  }
  const TokenizedSequence seq = encode_sequence(d.vocab, tagged, ck.model_config.max_len);
  SequenceTrace<float> trace;
  forward_sequence(ck.model, seq, d.rules, ForwardOptions{}, &trace);

  const fs::path out = prepare_out(cfg);
  fs::create_directories(out / "viz");
  std::vector<std::string> files;
  const std::size_t n = trace.length;
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    const auto& heads = trace.layers[l].attention.heads;
    for (std::size_t h = 0; h < heads.size(); ++h) {
      std::vector<double> vals(heads[h].probs.data.begin(), heads[h].probs.data.end());
      const std::string base = (out / "viz" / ("layer" + std::to_string(l) + "_head" + std::to_string(h))).string();
      write_matrix_csv(base + ".csv", n, n, vals);
      write_heatmap_pgm(base + ".pgm", n, n, vals, 0.0, 1.0);
      files.push_back(base + ".csv");
      files.push_back(base + ".pgm");
    }
  }
  return files;
}

std::vector<std::string> run_viz_mask(const RunConfig& cfg, const std::string& mask_path) {
  std::ifstream is(mask_path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open mask '" + mask_path + "'");
  const GrammaticalMask m = read_mask_binary(is);
  const fs::path out = prepare_out(cfg);
  fs::create_directories(out / "viz");
  std::vector<double> vals(m.bias.begin(), m.bias.end());
  double lo = 0.0, hi = 0.0;
  if (!vals.empty()) {
    lo = *std::min_element(vals.begin(), vals.end());
    hi = *std::max_element(vals.begin(), vals.end());
  }
  const std::string base = (out / "viz" / "mask").string();
  write_matrix_csv(base + ".csv", m.length, m.length, vals);
  write_heatmap_pgm(base + ".pgm", m.length, m.length, vals, lo, hi);
  return {base + ".csv", base + ".pgm"};
}

}  // namespace gramattn
