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

#include "gramattn/mask.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "gramattn/error.hpp"

namespace gramattn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary mask I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::kParse, "truncated mask file");
  }
  return v;
}

void require_hard(const GrammaticalMask& mask, const char* what) {
  if (mask.kind != MaskKind::kHard) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " requires a hard mask");
  }
}

}  // namespace

GrammaticalMask build_hard_mask(const RuleSet& rs, std::span<const PosTag> tags) {
  return build_hard_mask(rs, tags, {}, MaskOptions{});
}

GrammaticalMask build_hard_mask(const RuleSet& rs, std::span<const PosTag> tags,
                                std::span<const std::int32_t> word_index,
                                const MaskOptions& options) {
  const std::size_t n = tags.size();
  const bool same_word = options.same_word_attend && word_index.size() == n;
  GrammaticalMask m{n, MaskKind::kHard, std::vector<float>(n * n, kMaskNeg)};
  for (std::size_t i = 0; i < n; ++i) {
    float* row = m.bias.data() + i * n;
    if (rs.cls_attends_all() && tags[i] == PosTag::CLS) {
      std::fill(row, row + n, 0.0f);
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (rs.in_hard(tags[i], tags[j])) row[j] = 0.0f;
    }
    if (rs.self_always_allowed()) row[i] = 0.0f;
    if (same_word && word_index[i] >= 0) {
      for (std::size_t j = 0; j < n; ++j) {
        if (word_index[j] == word_index[i]) row[j] = 0.0f;
      }
    }
  }
  return m;
}

GrammaticalMask build_soft_mask(const RuleSet& rs, std::span<const PosTag> tags) {
  const std::size_t n = tags.size();
  const auto alpha = static_cast<float>(rs.alpha());
  GrammaticalMask m{n, MaskKind::kSoft, std::vector<float>(n * n, 0.0f)};
  for (std::size_t i = 0; i < n; ++i) {
    if (rs.cls_attends_all() && tags[i] == PosTag::CLS) continue;
    float* row = m.bias.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j && rs.self_always_allowed()) continue;
      if (rs.in_hard(tags[i], tags[j])) continue;
      if (rs.in_soft(tags[i], tags[j])) row[j] = alpha;
    }
  }
  return m;
}

GrammaticalMask build_mask(MaskKind kind, const RuleSet& rs, std::span<const PosTag> tags) {
  return kind == MaskKind::kHard ? build_hard_mask(rs, tags) : build_soft_mask(rs, tags);
}

SparseMask to_sparse(const GrammaticalMask& mask) {
  require_hard(mask, "to_sparse");
  SparseMask s;
  s.length = mask.length;
  s.row_offsets.reserve(mask.length + 1);
  s.row_offsets.push_back(0);
  for (std::size_t i = 0; i < mask.length; ++i) {
    for (std::size_t j = 0; j < mask.length; ++j) {
      if (mask.at(i, j) == 0.0f) s.indices.push_back(static_cast<std::uint32_t>(j));
    }
    s.row_offsets.push_back(static_cast<std::uint32_t>(s.indices.size()));
  }
  return s;
}

GrammaticalMask densify(const SparseMask& sparse) {
  const std::size_t n = sparse.length;
  GrammaticalMask m{n, MaskKind::kHard, std::vector<float>(n * n, kMaskNeg)};
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : sparse.row(i)) m.at(i, j) = 0.0f;
  }
  return m;
}

GrammaticalMask combine_padding(const GrammaticalMask& mask, std::span<const std::uint8_t> pad) {
  if (pad.size() != mask.length) {
    throw Error(ErrorCode::kShape, "padding flags length " + std::to_string(pad.size()) +
                                       " != mask length " + std::to_string(mask.length));
  }
  GrammaticalMask out = mask;
  for (std::size_t i = 0; i < out.length; ++i) {
    for (std::size_t j = 0; j < out.length; ++j) {
      if (pad[j]) out.at(i, j) = kMaskNeg;
    }
  }
  return out;
}

MaskStats mask_stats(const GrammaticalMask& mask) {
  require_hard(mask, "mask_stats");
  return mask_stats(to_sparse(mask));
}

MaskStats mask_stats(const SparseMask& sparse) {
  MaskStats st;
  st.length = sparse.length;
  st.allowed_pairs = sparse.nnz();
  st.row_histogram.assign(sparse.length + 1, 0);
  for (std::size_t r = 0; r < sparse.length; ++r) ++st.row_histogram[sparse.row(r).size()];
  if (sparse.length > 0) {
    const auto n = static_cast<double>(sparse.length);
    st.density = static_cast<double>(st.allowed_pairs) / (n * n);
    st.mean_connectivity = static_cast<double>(st.allowed_pairs) / n;
  }
  return st;
}

void write_mask_csv(std::ostream& os, const GrammaticalMask& mask) {
  char buf[32];
  for (std::size_t i = 0; i < mask.length; ++i) {
    for (std::size_t j = 0; j < mask.length; ++j) {
      std::snprintf(buf, sizeof buf, "%.1f", static_cast<double>(mask.at(i, j)));
      if (j) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

void write_mask_binary(std::ostream& os, const GrammaticalMask& mask) {
  os.write("GAM1", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(mask.length));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(mask.kind));
  os.write(reinterpret_cast<const char*>(mask.bias.data()),
           static_cast<std::streamsize>(mask.bias.size() * sizeof(float)));
}

void write_mask_binary(std::ostream& os, const SparseMask& sparse) {
  os.write("GAM1", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(sparse.length));
  put<std::uint8_t>(os, kBinarySparseKind);
  for (std::size_t r = 0; r < sparse.length; ++r) {
    auto row = sparse.row(r);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(row.size()));
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
  }
}

GrammaticalMask read_mask_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "GAM1", 4) != 0) {
    throw Error(ErrorCode::kParse, "not a GAM1 mask file");
  }
  const auto n = get<std::uint32_t>(is);
  const auto kind = get<std::uint8_t>(is);
  if (kind == kBinarySparseKind) {
    SparseMask s;
    s.length = n;
    s.row_offsets.push_back(0);
    for (std::uint32_t r = 0; r < n; ++r) {
      const auto count = get<std::uint32_t>(is);
      if (count > n) throw Error(ErrorCode::kParse, "sparse row longer than L");
      for (std::uint32_t c = 0; c < count; ++c) {
        const auto j = get<std::uint32_t>(is);
        if (j >= n) throw Error(ErrorCode::kParse, "sparse index out of range");
        s.indices.push_back(j);
      }
      s.row_offsets.push_back(static_cast<std::uint32_t>(s.indices.size()));
    }
    return densify(s);
  }
  if (kind > 1) throw Error(ErrorCode::kParse, "unknown mask kind " + std::to_string(kind));
  GrammaticalMask m{n, static_cast<MaskKind>(kind), std::vector<float>(std::size_t{n} * n)};
  if (!is.read(reinterpret_cast<char*>(m.bias.data()),
               static_cast<std::streamsize>(m.bias.size() * sizeof(float)))) {
    throw Error(ErrorCode::kParse, "truncated mask file");
  }
  return m;
}

}  // namespace gramattn
