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

#include "gramattn/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "gramattn/error.hpp"
#include "json.hpp"

namespace gramattn {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_continuation_byte(char c) {
  return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t t = line.find('\t', pos);
    if (t == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, t - pos));
    pos = t + 1;
  }
}

PosTag special_tag(PieceKind kind) {
  switch (kind) {
    case PieceKind::kCls: return PosTag::CLS;
    case PieceKind::kSep: return PosTag::SEP;
    case PieceKind::kPad: return PosTag::PAD;
    default: return PosTag::UNK;
  }
}

// Places each word at the next occurrence of its text in `sentence`.
void locate_words(std::string_view sentence, std::vector<TaggedWord>& words) {
  std::size_t cursor = 0;
  for (auto& w : words) {
    std::size_t at = sentence.find(w.text, cursor);
    if (at == std::string_view::npos || w.text.empty()) {
      throw Error(ErrorCode::kParse, "word '" + w.text + "' not found in sentence text");
    }
    w.span = {static_cast<std::uint32_t>(at), static_cast<std::uint32_t>(at + w.text.size())};
    cursor = at + w.text.size();
  }
}

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = ids_.emplace(tokens_[i], static_cast<std::int32_t>(i));
    if (!inserted) {
      throw Error(ErrorCode::kParse, "duplicate vocab entry '" + tokens_[i] + "' at line " +
                                         std::to_string(i + 1));
    }
  }
  auto require = [&](std::string_view t) {
    std::int32_t id = find(t);
    if (id < 0) throw Error(ErrorCode::kParse, "vocab lacks reserved token " + std::string(t));
    return id;
  };
  pad_ = require(kPadToken);
  unk_ = require(kUnkToken);
  cls_ = require(kClsToken);
  sep_ = require(kSepToken);
}

std::int32_t Vocab::find(std::string_view piece) const {
  auto it = ids_.find(std::string(piece));
  return it == ids_.end() ? -1 : it->second;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vocab load_vocab_file(const std::string& path) {
  std::vector<std::string> tokens;
  const std::string text = read_file(path);
  for (auto line : split_lines(text)) tokens.emplace_back(line);
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return Vocab(std::move(tokens));
}

Lexicon parse_lexicon(std::string_view text) {
  Lexicon lex;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0].empty()) {
      throw Error(ErrorCode::kParse, "lexicon line " + std::to_string(line_no) +
                                         ": expected word<TAB>TAG");
    }
    auto tag = try_parse_tag(cols[1]);
    if (!tag) {
      throw Error(ErrorCode::kParse, "lexicon line " + std::to_string(line_no) +
                                         ": unknown tag '" + std::string(cols[1]) + "'");
    }
    lex.emplace(lowercase(cols[0]), *tag);
  }
  return lex;
}

Lexicon load_lexicon_file(const std::string& path) { return parse_lexicon(read_file(path)); }

std::vector<TaggedWord> split_words(std::string_view sentence) {
  std::vector<TaggedWord> words;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && is_space(sentence[i])) ++i;
    std::size_t j = i;
    while (j < sentence.size() && !is_space(sentence[j])) ++j;
    if (j > i) {
      words.push_back({std::string(sentence.substr(i, j - i)),
                       {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)},
                       PosTag::X});
    }
    i = j;
  }
  return words;
}

std::vector<WordPiece> tokenize_with_offsets(const Vocab& vocab, std::string_view sentence) {
  auto words = split_words(sentence);
  if (words.empty()) throw Error(ErrorCode::kInvalidArgument, "empty sentence");

  std::vector<WordPiece> out;
  std::string candidate;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::string& word = words[w].text;
    const std::uint32_t base = words[w].span.start;
    std::vector<WordPiece> pieces;
    std::size_t start = 0;
    bool ok = true;
    while (start < word.size()) {
      std::size_t end = word.size();
      std::int32_t hit = -1;
      while (end > start) {
        if (end < word.size() && is_continuation_byte(word[end])) {
          --end;
          continue;
        }
        candidate.assign(start > 0 ? "##" : "");
        candidate.append(word, start, end - start);
        hit = vocab.find(candidate);
        if (hit >= 0) break;
        --end;
      }
      if (hit < 0) {
        ok = false;
        break;
      }
      pieces.push_back({hit,
                        {static_cast<std::uint32_t>(base + start), static_cast<std::uint32_t>(base + end)},
                        static_cast<std::int32_t>(w),
                        PieceKind::kWord});
      start = end;
    }
    if (ok) {
      out.insert(out.end(), pieces.begin(), pieces.end());
    } else {
      out.push_back({vocab.unk_id(), words[w].span, static_cast<std::int32_t>(w), PieceKind::kUnk});
    }
  }
  return out;
}

std::vector<TaggedSentence> ingest_conllu(std::string_view text) {
  std::vector<TaggedSentence> out;
  TaggedSentence cur;
  bool have_text = false;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (cur.words.empty()) {
      cur = {};
      have_text = false;
      return;
    }
    if (!have_text) {
      cur.text.clear();
      for (std::size_t i = 0; i < cur.words.size(); ++i) {
        if (i) cur.text += ' ';
        cur.text += cur.words[i].text;
      }
    }
    locate_words(cur.text, cur.words);
    out.push_back(std::move(cur));
    cur = {};
    have_text = false;
  };

  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') {
      constexpr std::string_view kText = "# text = ";
      if (line.substr(0, kText.size()) == kText) {
        cur.text = std::string(line.substr(kText.size()));
        have_text = true;
      }
      continue;
    }
    auto cols = split_tabs(line);
    const std::string where = "conllu line " + std::to_string(line_no);
    if (cols.size() < 4) throw Error(ErrorCode::kParse, where + ": missing UPOS column");
    std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      continue;
    }
    if (cols[3].empty() || cols[3] == "_") {
      throw Error(ErrorCode::kParse, where + ": missing UPOS column");
    }
    auto tag = try_parse_tag(cols[3]);
    if (!tag || is_special(*tag)) {
      throw Error(ErrorCode::kParse, where + ": invalid UPOS tag '" + std::string(cols[3]) + "'");
    }
    cur.words.push_back({std::string(cols[1]), {}, *tag});
  }
  flush();
  return out;
}

std::vector<PosTag> baseline_tag(const Lexicon& lexicon, const std::vector<std::string>& words) {
  std::vector<PosTag> tags;
  tags.reserve(words.size());
  for (const auto& raw : words) {
    const std::string w = lowercase(raw);
    if (auto it = lexicon.find(w); it != lexicon.end()) {
      tags.push_back(it->second);
    } else if (ends_with(w, "ly")) {
      tags.push_back(PosTag::ADV);
    } else if (ends_with(w, "ing") || ends_with(w, "ed")) {
      tags.push_back(PosTag::VERB);
    } else if (ends_with(w, "ous") || ends_with(w, "ful") || ends_with(w, "ive") ||
               ends_with(w, "able")) {
      tags.push_back(PosTag::ADJ);
    } else if (!w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) {
                 return std::isdigit(c) != 0;
               })) {
      tags.push_back(PosTag::NUM);
    } else if (w.size() == 1 && std::ispunct(static_cast<unsigned char>(w[0]))) {
      tags.push_back(PosTag::PUNCT);
    } else {
      tags.push_back(PosTag::NOUN);
    }
  }
  return tags;
}

TaggedSentence tag_sentence(const Lexicon& lexicon, std::string_view sentence) {
  TaggedSentence out{std::string(sentence), split_words(sentence)};
  std::vector<std::string> surface;
  surface.reserve(out.words.size());
  for (const auto& w : out.words) surface.push_back(w.text);
  auto tags = baseline_tag(lexicon, surface);
  for (std::size_t i = 0; i < tags.size(); ++i) out.words[i].pos = tags[i];
  return out;
}

std::vector<PosTag> align_tags(const std::vector<WordPiece>& pieces,
                               const std::vector<TaggedWord>& words) {
  std::vector<PosTag> tags;
  tags.reserve(pieces.size());
  for (const auto& p : pieces) {
    if (p.kind != PieceKind::kWord && p.kind != PieceKind::kUnk) {
      tags.push_back(special_tag(p.kind));
      continue;
    }
    // Words are sorted by span; find the last word starting at or before the piece.
    auto it = std::upper_bound(words.begin(), words.end(), p.span.start,
                               [](std::uint32_t off, const TaggedWord& w) { return off < w.span.start; });
    if (it == words.begin() || p.span.start >= std::prev(it)->span.end) {
      if (p.kind == PieceKind::kUnk) {
        tags.push_back(PosTag::UNK);
        continue;
      }
      throw Error(ErrorCode::kAlignment,
                  "token at offset " + std::to_string(p.span.start) + " lies in no word span");
    }
    tags.push_back(std::prev(it)->pos);
  }
  return tags;
}

TokenizedSequence encode_sequence(const Vocab& vocab, const TaggedSentence& sentence,
                                  std::size_t max_len) {
  if (max_len < 3) throw Error(ErrorCode::kInvalidArgument, "max_len must be >= 3");
  auto pieces = tokenize_with_offsets(vocab, sentence.text);
  if (pieces.size() > max_len - 2) pieces.resize(max_len - 2);

  std::vector<WordPiece> all;
  all.reserve(max_len);
  all.push_back({vocab.cls_id(), {}, -1, PieceKind::kCls});
  all.insert(all.end(), pieces.begin(), pieces.end());
  all.push_back({vocab.sep_id(), {}, -1, PieceKind::kSep});
  const std::size_t live = all.size();
  while (all.size() < max_len) all.push_back({vocab.pad_id(), {}, -1, PieceKind::kPad});

  TokenizedSequence seq;
  seq.tags = align_tags(all, sentence.words);
  seq.live_length = live;
  seq.pad_length = max_len - live;
  for (const auto& p : all) {
    seq.ids.push_back(p.id);
    seq.spans.push_back(p.span);
    seq.word_index.push_back(p.word);
    seq.pad.push_back(p.kind == PieceKind::kPad ? 1 : 0);
  }
  return seq;
}

std::vector<TokenizedSequence> encode_batch(const Vocab& vocab,
                                            const std::vector<TaggedSentence>& sentences,
                                            std::size_t max_len) {
  std::vector<TokenizedSequence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(encode_sequence(vocab, s, max_len));
  return out;
}

std::vector<TaggedSentence> read_tagged_jsonl(std::string_view text) {
  std::vector<TaggedSentence> out;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::string where = "jsonl line " + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
    if (!obj.contains("words") || !obj.contains("tags") || !obj["words"].is_array() ||
        !obj["tags"].is_array() || obj["words"].size() != obj["tags"].size()) {
      throw Error(ErrorCode::kParse, where + ": expected equal-length 'words' and 'tags' arrays");
    }
    TaggedSentence s;
    for (std::size_t i = 0; i < obj["words"].size(); ++i) {
      const auto& w = obj["words"][i];
      const auto& t = obj["tags"][i];
      if (!w.is_string() || !t.is_string()) {
        throw Error(ErrorCode::kParse, where + ": words and tags must be strings");
      }
      auto tag = try_parse_tag(t.get<std::string>());
      if (!tag) {
        throw Error(ErrorCode::kParse, where + ": unknown tag '" + t.get<std::string>() + "'");
      }
      if (i) s.text += ' ';
      const auto start = static_cast<std::uint32_t>(s.text.size());
      s.text += w.get<std::string>();
      s.words.push_back({w.get<std::string>(), {start, static_cast<std::uint32_t>(s.text.size())}, *tag});
    }
    if (obj.contains("sentence") && obj["sentence"].is_string()) {
      s.text = obj["sentence"].get<std::string>();
      locate_words(s.text, s.words);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledExample> parse_tsv_dataset(std::string_view text) {
  std::vector<LabeledExample> out;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == "sentence\tlabel") continue;
    auto tab = line.rfind('\t');
    const std::string where = "dataset line " + std::to_string(line_no);
    if (tab == std::string_view::npos) throw Error(ErrorCode::kParse, where + ": expected sentence<TAB>label");
    std::string_view label = line.substr(tab + 1);
    if (label != "0" && label != "1") {
      throw Error(ErrorCode::kParse, where + ": label must be 0 or 1");
    }
    out.push_back({std::string(line.substr(0, tab)), label == "1" ? 1 : 0});
  }
  return out;
}

std::vector<LabeledExample> load_tsv_dataset(const std::string& path) {
  return parse_tsv_dataset(read_file(path));
}

}  // namespace gramattn
