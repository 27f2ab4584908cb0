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
#include <span>
#include <string>
#include <vector>

#include "gramattn/pos.hpp"
#include "gramattn/rules.hpp"

namespace gramattn {

/// Additive bias for disallowed pairs. Underflows to probability zero after
/// max-subtraction in single and double precision.
inline constexpr float kMaskNeg = -10000.0f;

enum class MaskKind : std::uint8_t { kHard = 0, kSoft = 1 };

// L x L additive attention bias, row = query, column = key.
struct GrammaticalMask {
  std::size_t length = 0;
  MaskKind kind = MaskKind::kHard;
  std::vector<float> bias;  // row-major

  float at(std::size_t i, std::size_t j) const { return bias[i * length + j]; }
  float& at(std::size_t i, std::size_t j) { return bias[i * length + j]; }
  std::span<const float> row(std::size_t i) const {
    return {bias.data() + i * length, length};
  }

  friend bool operator==(const GrammaticalMask&, const GrammaticalMask&) = default;
};

// Allowed keys per query row in CSR layout. Rows are sorted ascending.
struct SparseMask {
  std::size_t length = 0;
  std::vector<std::uint32_t> row_offsets;  // length + 1 entries
  std::vector<std::uint32_t> indices;

  std::span<const std::uint32_t> row(std::size_t r) const {
    return {indices.data() + row_offsets[r], row_offsets[r + 1] - row_offsets[r]};
  }
  std::size_t nnz() const noexcept { return indices.size(); }

  friend bool operator==(const SparseMask&, const SparseMask&) = default;
};

struct MaskStats {
  std::size_t length = 0;
  std::size_t allowed_pairs = 0;
  double density = 0.0;
  double mean_connectivity = 0.0;         // C = allowed_pairs / L
  std::vector<std::size_t> row_histogram;  // [k] = rows with k allowed keys
};

struct MaskOptions {
  // Lets subwords of one word attend to each other. Off by default.
  bool same_word_attend = false;
};

GrammaticalMask build_hard_mask(const RuleSet& rs, std::span<const PosTag> tags);
GrammaticalMask build_hard_mask(const RuleSet& rs, std::span<const PosTag> tags,
                                std::span<const std::int32_t> word_index,
                                const MaskOptions& options);

GrammaticalMask build_soft_mask(const RuleSet& rs, std::span<const PosTag> tags);

/// Dispatches on kind.
GrammaticalMask build_mask(MaskKind kind, const RuleSet& rs, std::span<const PosTag> tags);

/// Throws Error(kInvalidArgument) for soft masks, which have full support.
SparseMask to_sparse(const GrammaticalMask& mask);
GrammaticalMask densify(const SparseMask& sparse);

/// Overwrites every padded key column with kMaskNeg.
GrammaticalMask combine_padding(const GrammaticalMask& mask, std::span<const std::uint8_t> pad);

/// Throws Error(kInvalidArgument) for soft masks.
MaskStats mask_stats(const GrammaticalMask& mask);
MaskStats mask_stats(const SparseMask& sparse);

// Exports. The binary layout is little-endian:
//   "GAM1" | u32 L | u8 kind | payload
// kind 0 (hard) and 1 (soft) carry L*L row-major f32; kind 2 is a sparse hard
// mask carrying, per row, u32 count followed by count u32 key indices.
inline constexpr std::uint8_t kBinarySparseKind = 2;

void write_mask_csv(std::ostream& os, const GrammaticalMask& mask);
void write_mask_binary(std::ostream& os, const GrammaticalMask& mask);
void write_mask_binary(std::ostream& os, const SparseMask& sparse);

/// Reads either binary form; sparse input is densified to a hard mask.
GrammaticalMask read_mask_binary(std::istream& is);

}  // namespace gramattn
