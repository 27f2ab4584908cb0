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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gramattn/pos.hpp"

namespace gramattn {

inline constexpr std::size_t kDefaultMaxLen = 128;

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

// Subword vocabulary. Continuation pieces carry a "##" prefix. Ids are the
// line numbers of the vocab file.
class Vocab {
 public:
  /// Throws Error(kParse) on duplicates or missing/duplicated reserved tokens.
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::int32_t id) const { return tokens_.at(id); }
  /// -1 when absent.
  std::int32_t find(std::string_view piece) const;

  std::int32_t pad_id() const noexcept { return pad_; }
  std::int32_t unk_id() const noexcept { return unk_; }
  std::int32_t cls_id() const noexcept { return cls_; }
  std::int32_t sep_id() const noexcept { return sep_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
  std::int32_t pad_ = -1, unk_ = -1, cls_ = -1, sep_ = -1;
};

Vocab load_vocab_file(const std::string& path);

// Lowercase word -> most frequent tag. File format: word<TAB>TAG per line.
using Lexicon = std::unordered_map<std::string, PosTag>;

Lexicon parse_lexicon(std::string_view text);
Lexicon load_lexicon_file(const std::string& path);

// Half-open byte range [start, end) into the original sentence.
struct Span {
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct TaggedWord {
  std::string text;
  Span span;
  PosTag pos = PosTag::X;
};

struct TaggedSentence {
  std::string text;
  std::vector<TaggedWord> words;
};

enum class PieceKind : std::uint8_t { kWord, kUnk, kCls, kSep, kPad };

struct WordPiece {
  std::int32_t id = 0;
  Span span;                  // (0,0) for specials other than in-sentence [UNK]
  std::int32_t word = -1;     // parent word index, -1 for specials
  PieceKind kind = PieceKind::kWord;
};

struct TokenizedSequence {
  std::vector<std::int32_t> ids;
  std::vector<Span> spans;
  std::vector<std::int32_t> word_index;
  std::vector<PosTag> tags;
  std::vector<std::uint8_t> pad;  // 1 at padding positions
  std::size_t live_length = 0;    // [CLS] .. [SEP] inclusive
  std::size_t pad_length = 0;

  std::size_t length() const noexcept { return ids.size(); }
  friend bool operator==(const TokenizedSequence&, const TokenizedSequence&) = default;
};

/// Whitespace-separated words with their byte spans.
std::vector<TaggedWord> split_words(std::string_view sentence);

/// Greedy longest-match subword decomposition of each whitespace word. A word
/// with no full decomposition becomes a single [UNK] piece spanning it.
/// Throws Error(kInvalidArgument) on an all-whitespace sentence.
std::vector<WordPiece> tokenize_with_offsets(const Vocab& vocab, std::string_view sentence);

/// One TaggedSentence per CoNLL-U sentence. Multiword ranges (1-2) and empty
/// nodes (1.1) are skipped. Uses `# text =` when present, otherwise joins the
/// forms with single spaces.
std::vector<TaggedSentence> ingest_conllu(std::string_view text);

/// Lexicon lookup, then suffix heuristics, then NOUN.
std::vector<PosTag> baseline_tag(const Lexicon& lexicon, const std::vector<std::string>& words);

TaggedSentence tag_sentence(const Lexicon& lexicon, std::string_view sentence);

/// Assigns each piece the tag of the word whose span contains its start.
/// Specials get their own tag. Throws Error(kAlignment) with the offset when
/// a word piece falls outside every word.
std::vector<PosTag> align_tags(const std::vector<WordPiece>& pieces,
                               const std::vector<TaggedWord>& words);

/// [CLS] pieces.. [SEP] [PAD]..; truncated to max_len keeping the prefix.
TokenizedSequence encode_sequence(const Vocab& vocab, const TaggedSentence& sentence,
                                  std::size_t max_len);

std::vector<TokenizedSequence> encode_batch(const Vocab& vocab,
                                            const std::vector<TaggedSentence>& sentences,
                                            std::size_t max_len);

/// One JSON object per line with "words" and "tags" arrays.
std::vector<TaggedSentence> read_tagged_jsonl(std::string_view text);

struct LabeledExample {
  std::string sentence;
  int label = 0;
};

/// sentence<TAB>label lines; a leading "sentence\tlabel" header is skipped.
std::vector<LabeledExample> parse_tsv_dataset(std::string_view text);
std::vector<LabeledExample> load_tsv_dataset(const std::string& path);

std::string read_file(const std::string& path);

}  // namespace gramattn
