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

#include "gramattn/config.hpp"

#include <charconv>
#include <sstream>

#include "gramattn/error.hpp"

namespace gramattn {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kInvalidArgument,
              "bad value '" + std::string(value) + "' for " + std::string(key));
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    double d = std::stod(std::string(v), &used);
    if (used != v.size()) bad_value(key, v);
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

std::string fmt_double(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  const std::string data = GRAMATTN_DEFAULT_DATA_DIR;
  c.rules_path = std::string(GRAMATTN_DEFAULT_RULES_DIR) + "/default.rules";
  c.vocab_path = data + "/vocab.txt";
  c.lexicon_path = data + "/lexicon.tsv";
  c.train_path = data + "/train.tsv";
  c.dev_path = data + "/dev.tsv";
  return c;
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  if (key == "model.layers") c.model.num_layers = to_size(key, v);
  else if (key == "model.hidden") c.model.hidden = to_size(key, v);
  else if (key == "model.heads") c.model.num_heads = to_size(key, v);
  else if (key == "model.ffn_dim") c.model.ffn_dim = to_size(key, v);
  else if (key == "model.max_len") c.model.max_len = to_size(key, v);
  else if (key == "model.num_classes") c.model.num_classes = to_size(key, v);
  else if (key == "model.strategy") c.model.strategy = parse_strategy(v);
  else if (key == "model.vocab_size") {
    if (v == "auto") {
      c.vocab_size_from_vocab = true;
    } else {
      c.model.vocab_size = to_size(key, v);
      c.vocab_size_from_vocab = false;
    }
  }
  else if (key == "train.epochs") c.train.epochs = to_size(key, v);
  else if (key == "train.learning_rate") c.train.learning_rate = to_double(key, v);
  else if (key == "train.batch_size") c.train.batch_size = to_size(key, v);
  else if (key == "train.weight_decay") c.train.weight_decay = to_double(key, v);
  else if (key == "train.beta1") c.train.beta1 = to_double(key, v);
  else if (key == "train.beta2") c.train.beta2 = to_double(key, v);
  else if (key == "train.epsilon") c.train.epsilon = to_double(key, v);
  else if (key == "train.seed") c.train.seed = to_u64(key, v);
  else if (key == "train.threads") c.train.threads = to_size(key, v);
  else if (key == "train.check_leakage") c.train.check_leakage = to_bool(key, v);
  else if (key == "paths.rules") c.rules_path = v;
  else if (key == "paths.vocab") c.vocab_path = v;
  else if (key == "paths.lexicon") c.lexicon_path = v;
  else if (key == "paths.train") c.train_path = v;
  else if (key == "paths.dev") c.dev_path = v;
  else if (key == "paths.out") c.out_dir = v;
  else if (key == "bench.sizes") {
    std::vector<std::size_t> sizes;
    std::size_t pos = 0;
    while (pos <= v.size()) {
      std::size_t comma = v.find(',', pos);
      if (comma == std::string_view::npos) comma = v.size();
      sizes.push_back(to_size(key, trim(v.substr(pos, comma - pos))));
      pos = comma + 1;
    }
    c.bench_sizes = std::move(sizes);
  }
  else if (key == "bench.repetitions") c.bench_repetitions = to_size(key, v);
  else if (key == "bench.head_dim") c.bench_head_dim = to_size(key, v);
  else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::string section;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::kParse, where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::kParse, where + "expected key = value");
    if (section.empty()) throw Error(ErrorCode::kParse, where + "key outside of a [section]");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    try {
      set_config_value(cfg, key, line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, where + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  apply_config_text(cfg, read_file(path));
}

void resolve_run_config(RunConfig& cfg) {
  if (cfg.vocab_size_from_vocab) {
    cfg.model.vocab_size = load_vocab_file(cfg.vocab_path).size();
  }
  cfg.model.validate();
  cfg.train.validate();
  if (cfg.bench_sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "bench.sizes is empty");
  for (auto s : cfg.bench_sizes) {
    if (s < 2) throw Error(ErrorCode::kInvalidArgument, "bench sizes must be >= 2");
  }
  if (cfg.bench_repetitions < 10) {
    throw Error(ErrorCode::kInvalidArgument, "bench.repetitions must be >= 10");
  }
  if (cfg.bench_head_dim == 0) throw Error(ErrorCode::kInvalidArgument, "bench.head_dim must be >= 1");
}

std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[model]\n"
     << "layers = " << c.model.num_layers << '\n'
     << "hidden = " << c.model.hidden << '\n'
     << "heads = " << c.model.num_heads << '\n'
     << "ffn_dim = " << c.model.ffn_dim << '\n'
     << "vocab_size = " << c.model.vocab_size << '\n'
     << "max_len = " << c.model.max_len << '\n'
     << "num_classes = " << c.model.num_classes << '\n'
     << "strategy = " << strategy_name(c.model.strategy) << '\n'
     << "\n[train]\n"
     << "epochs = " << c.train.epochs << '\n'
     << "learning_rate = " << fmt_double(c.train.learning_rate) << '\n'
     << "batch_size = " << c.train.batch_size << '\n'
     << "weight_decay = " << fmt_double(c.train.weight_decay) << '\n'
     << "beta1 = " << fmt_double(c.train.beta1) << '\n'
     << "beta2 = " << fmt_double(c.train.beta2) << '\n'
     << "epsilon = " << fmt_double(c.train.epsilon) << '\n'
     << "seed = " << c.train.seed << '\n'
     << "threads = " << c.train.threads << '\n'
     << "check_leakage = " << (c.train.check_leakage ? "true" : "false") << '\n'
     << "\n[paths]\n"
     << "rules = " << c.rules_path << '\n'
     << "vocab = " << c.vocab_path << '\n'
     << "lexicon = " << c.lexicon_path << '\n'
     << "train = " << c.train_path << '\n'
     << "dev = " << c.dev_path << '\n'
     << "out = " << c.out_dir << '\n'
     << "\n[bench]\n"
     << "sizes = ";
  for (std::size_t i = 0; i < c.bench_sizes.size(); ++i) os << (i ? "," : "") << c.bench_sizes[i];
  os << '\n'
     << "repetitions = " << c.bench_repetitions << '\n'
     << "head_dim = " << c.bench_head_dim << '\n';
  return os.str();
}

}  // namespace gramattn
