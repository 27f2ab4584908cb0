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
#include <bitset>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gramattn/pos.hpp"

namespace gramattn {

inline constexpr double kDefaultAlpha = 5.0;

// Directed (query tag -> key tag) pair sets for hard and soft masking.
//
// A pair present in both sets is treated as hard: always allowed, never
// biased. Positional exceptions (self attention, the [CLS] row) are flags
// here but are applied by the mask builders, not by the pair lookups.
class RuleSet {
 public:
  RuleSet() = default;

  void add_hard(PosTag query, PosTag key);
  void add_soft(PosTag query, PosTag key);

  /// Throws Error(kInvalidArgument) for negative or non-finite alpha.
  void set_alpha(double alpha);
  void set_cls_attends_all(bool v) { cls_attends_all_ = v; }
  void set_self_always_allowed(bool v) { self_always_allowed_ = v; }

  bool in_hard(PosTag query, PosTag key) const noexcept {
    return hard_[tag_index(query)][tag_index(key)];
  }
  bool in_soft(PosTag query, PosTag key) const noexcept {
    return soft_[tag_index(query)][tag_index(key)];
  }

  double alpha() const noexcept { return alpha_; }
  bool cls_attends_all() const noexcept { return cls_attends_all_; }
  bool self_always_allowed() const noexcept { return self_always_allowed_; }

  std::vector<std::pair<PosTag, PosTag>> hard_pairs() const;
  std::vector<std::pair<PosTag, PosTag>> soft_pairs() const;

  friend bool operator==(const RuleSet& a, const RuleSet& b) noexcept;

 private:
  using Row = std::bitset<kNumTags>;
  std::array<Row, kNumTags> hard_{};
  std::array<Row, kNumTags> soft_{};
  double alpha_ = kDefaultAlpha;
  bool cls_attends_all_ = true;
  bool self_always_allowed_ = true;
};

/// Parses the rule-file grammar:
///
///   # comment
///   alpha 5.0
///   cls_attends_all true
///   self_always_allowed true
///   hard ADJ -> NOUN PROPN
///   soft ADV -> VERB
///
/// Errors carry the 1-based line number.
RuleSet parse_ruleset(std::string_view text);

/// Canonical text form; parse_ruleset(serialize_ruleset(r)) == r.
std::string serialize_ruleset(const RuleSet& rs);

RuleSet load_ruleset_file(const std::string& path);

/// The illustrative rule subset: content-word attachments as hard rules,
/// adverb/subject/conjunction preferences as soft rules, alpha = 5.
RuleSet default_ruleset();

/// Every pair allowed; hard masking with this set is the identity mask.
RuleSet all_pairs_ruleset();

inline bool hard_allowed(const RuleSet& rs, PosTag q, PosTag k) noexcept {
  return rs.in_hard(q, k);
}

inline double soft_bias(const RuleSet& rs, PosTag q, PosTag k) noexcept {
  if (rs.in_hard(q, k)) return 0.0;
  return rs.in_soft(q, k) ? rs.alpha() : 0.0;
}

struct Diagnostic {
  enum class Kind {
    kHardQueryAbsent,   // tag never a hard query: self-only rows
    kOverlap,           // pair in both sets; hard wins
    kZeroAlphaWithSoft, // soft rules have no effect
  };
  Kind kind;
  std::string message;
  PosTag query = PosTag::X;
  PosTag key = PosTag::X;
};

std::vector<Diagnostic> validate_ruleset(const RuleSet& rs);

}  // namespace gramattn
