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

#include "gramattn/pos.hpp"

#include <string>

#include "gramattn/error.hpp"

namespace gramattn {
namespace {

constexpr std::array<std::string_view, kNumTags> kNames = {
    "ADJ",   "ADP",  "ADV",   "AUX",  "CCONJ", "DET", "INTJ",
    "NOUN",  "NUM",  "PART",  "PRON", "PROPN", "PUNCT", "SCONJ",
    "SYM",   "VERB", "X",     "CLS",  "SEP",   "PAD", "UNK",
};

template <std::size_t N>
constexpr std::array<PosTag, N> make_tags() {
  std::array<PosTag, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<PosTag>(i);
  return out;
}

constexpr auto kAll = make_tags<kNumTags>();
constexpr auto kUd = make_tags<kNumUdTags>();

}  // namespace

std::string_view tag_name(PosTag t) noexcept { return kNames[tag_index(t)]; }

std::optional<PosTag> try_parse_tag(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumTags; ++i) {
    if (kNames[i] == name) return static_cast<PosTag>(i);
  }
  return std::nullopt;
}

PosTag parse_tag(std::string_view name) {
  if (auto t = try_parse_tag(name)) return *t;
  throw Error(ErrorCode::kParse, "unknown POS tag '" + std::string(name) + "'");
}

const std::array<PosTag, kNumTags>& all_tags() noexcept { return kAll; }
const std::array<PosTag, kNumUdTags>& ud_tags() noexcept { return kUd; }

}  // namespace gramattn
