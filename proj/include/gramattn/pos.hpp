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

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace gramattn {

// Universal Dependencies UPOS inventory followed by the special-token tags.
// Values are stable; they index rule tables and appear in binary outputs.
enum class PosTag : std::uint8_t {
  ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM, PART, PRON, PROPN, PUNCT,
  SCONJ, SYM, VERB, X,
  CLS, SEP, PAD, UNK,
};

inline constexpr std::size_t kNumUdTags = 17;
inline constexpr std::size_t kNumTags = 21;

inline constexpr std::size_t tag_index(PosTag t) noexcept {
  return static_cast<std::size_t>(t);
}

inline constexpr bool is_special(PosTag t) noexcept {
  return tag_index(t) >= kNumUdTags;
}

std::string_view tag_name(PosTag t) noexcept;

std::optional<PosTag> try_parse_tag(std::string_view name) noexcept;

/// Throws Error(kParse) naming the offending string.
PosTag parse_tag(std::string_view name);

const std::array<PosTag, kNumTags>& all_tags() noexcept;
const std::array<PosTag, kNumUdTags>& ud_tags() noexcept;

}  // namespace gramattn
