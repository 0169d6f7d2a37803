// Copyright 2026 The vegeta-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// N:M structured-sparsity codec and the unstructured -> row-wise N:4
// transform.
//
// Compressed layout: for every row, each block of m dense columns keeps
// exactly n (value, position) slots. Positions are log2(m)-bit entries packed
// little-endian into one 64-bit word per row, slot j at bits [w*j, w*j + w).
// Under-full blocks are padded with zero values at the smallest unused
// positions and the n positions of a block are stored in ascending order, so
// every conforming tile has exactly one encoding.
//
// A scalar counts as zero only when its bit pattern is all zeros; -0.0 is
// kept as a non-zero so that round trips are bit-exact.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vegeta/common.hpp"

namespace vegeta {

enum class DType : std::uint8_t { kBf16 = 0, kFp32 = 1 };

constexpr std::size_t dtype_size(DType t) { return t == DType::kBf16 ? 2 : 4; }

/// Row-major tile of raw scalar bit patterns (BF16 patterns use the low
/// 16 bits).
struct DenseTile {
  std::size_t rows = 0;
  std::size_t cols = 0;
  DType dtype = DType::kBf16;
  std::vector<std::uint32_t> values;

  static DenseTile zeros(std::size_t rows, std::size_t cols, DType dtype = DType::kBf16) {
    return DenseTile{rows, cols, dtype, std::vector<std::uint32_t>(rows * cols, 0)};
  }

  std::uint32_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::uint32_t& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }

  std::span<const std::uint32_t> row(std::size_t r) const {
    return std::span<const std::uint32_t>(values).subspan(r * cols, cols);
  }

  void check() const {
    if (values.size() != rows * cols) {
      throw ShapeError("tile payload has " + std::to_string(values.size()) +
                       " scalars, expected " + std::to_string(rows * cols));
    }
    if (dtype == DType::kBf16) {
      for (auto v : values) {
        if (v > 0xFFFFu) throw DtypeError("BF16 tile holds a scalar wider than 16 bits");
      }
    }
  }

  friend bool operator==(const DenseTile&, const DenseTile&) = default;
};

struct NMPattern {
  unsigned n = 2;
  unsigned m = 4;

  /// Bits per position entry.
  unsigned index_bits() const { return log2_exact(m); }

  void check() const {
    if (m < 2 || !is_power_of_two(m)) {
      throw PatternError("block size m=" + std::to_string(m) + " must be a power of two >= 2");
    }
    if (n < 1 || n > m) {
      throw PatternError("pattern " + to_string() + " needs 1 <= n <= m");
    }
  }

  std::string to_string() const { return std::to_string(n) + ":" + std::to_string(m); }

  static NMPattern parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw PatternError("expected N:M, got '" + std::string(text) + "'");
    NMPattern p;
    try {
      p.n = static_cast<unsigned>(std::stoul(std::string(text.substr(0, colon))));
      p.m = static_cast<unsigned>(std::stoul(std::string(text.substr(colon + 1))));
    } catch (const std::exception&) {
      throw PatternError("expected N:M, got '" + std::string(text) + "'");
    }
    p.check();
    return p;
  }

  friend bool operator==(const NMPattern&, const NMPattern&) = default;
};

inline constexpr NMPattern kPattern1of4{1, 4};
inline constexpr NMPattern kPattern2of4{2, 4};
inline constexpr NMPattern kPattern4of4{4, 4};

struct CompressedTile {
  NMPattern pattern;
  std::size_t phys_rows = 0;
  std::size_t phys_cols = 0;  // stored slots per row
  std::vector<std::uint16_t> values;
  // Per row, slot j's index at bits [w*j, w*j + w) of a little-endian bit
  // stream of words_per_row() words.
  std::vector<std::uint64_t> metadata;

  std::size_t effective_cols() const { return phys_cols / pattern.n * pattern.m; }
  std::size_t words_per_row() const { return metadata_words_per_row(phys_cols, pattern.m); }

  static std::size_t metadata_words_per_row(std::size_t slots, unsigned m) {
    return std::max<std::size_t>(1, (slots * log2_exact(m) + 63) / 64);
  }

  unsigned entry(std::size_t row, std::size_t slot) const {
    const unsigned w = pattern.index_bits();
    const std::size_t base = row * words_per_row() * 64 + slot * w;
    unsigned v = 0;
    for (unsigned b = 0; b < w; ++b) {
      const std::size_t bit = base + b;
      v |= static_cast<unsigned>((metadata[bit / 64] >> (bit % 64)) & 1u) << b;
    }
    return v;
  }

  friend bool operator==(const CompressedTile&, const CompressedTile&) = default;
};

/// Packs `positions` (one per slot) into a row's metadata words.
inline std::vector<std::uint64_t> pack_metadata_row(std::span<const unsigned> positions, unsigned m) {
  const unsigned w = log2_exact(m);
  std::vector<std::uint64_t> words(CompressedTile::metadata_words_per_row(positions.size(), m), 0);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    for (unsigned b = 0; b < w; ++b) {
      const std::size_t bit = j * w + b;
      words[bit / 64] |= static_cast<std::uint64_t>((positions[j] >> b) & 1u) << (bit % 64);
    }
  }
  return words;
}

/// Single-word form of pack_metadata_row for rows of at most 64 bits.
inline std::uint64_t pack_metadata_word(std::span<const unsigned> positions, unsigned m) {
  if (positions.size() * log2_exact(m) > 64) throw ShapeError("metadata row needs more than 64 bits");
  return pack_metadata_row(positions, m).front();
}

inline CompressedTile compress_nm(const DenseTile& tile, NMPattern pattern) {
  pattern.check();
  tile.check();
  if (tile.dtype != DType::kBf16) throw DtypeError("N:M compression requires a BF16 tile");
  if (tile.cols % pattern.m != 0) {
    throw ShapeError("tile has " + std::to_string(tile.cols) + " columns, not a multiple of m=" +
                     std::to_string(pattern.m));
  }
  const std::size_t blocks = tile.cols / pattern.m;
  CompressedTile out;
  out.pattern = pattern;
  out.phys_rows = tile.rows;
  out.phys_cols = blocks * pattern.n;
  out.values.reserve(tile.rows * out.phys_cols);
  out.metadata.reserve(tile.rows * out.words_per_row());

  std::vector<unsigned> positions(out.phys_cols);
  std::vector<bool> used(pattern.m);
  for (std::size_t r = 0; r < tile.rows; ++r) {
    const auto row = tile.row(r);
    for (std::size_t b = 0; b < blocks; ++b) {
      const auto block = row.subspan(b * pattern.m, pattern.m);
      std::fill(used.begin(), used.end(), false);
      unsigned count = 0;
      for (unsigned p = 0; p < pattern.m; ++p) {
        if (block[p] != 0) {
          if (++count > pattern.n) throw BlockOverflow(r, b);
          used[p] = true;
        }
      }
      for (unsigned p = 0; p < pattern.m && count < pattern.n; ++p) {
        if (!used[p]) {
          used[p] = true;
          ++count;
        }
      }
      std::size_t slot = b * pattern.n;
      for (unsigned p = 0; p < pattern.m; ++p) {
        if (used[p]) {
          positions[slot] = p;
          out.values.push_back(static_cast<std::uint16_t>(block[p]));
          ++slot;
        }
      }
    }
    const auto words = pack_metadata_row(positions, pattern.m);
    out.metadata.insert(out.metadata.end(), words.begin(), words.end());
  }
  return out;
}

inline DenseTile decompress_nm(const CompressedTile& ct) {
  ct.pattern.check();
  const auto n = ct.pattern.n;
  if (ct.phys_cols % n != 0) throw ShapeError("slot count per row is not a multiple of n");
  if (ct.values.size() != ct.phys_rows * ct.phys_cols || ct.metadata.size() != ct.phys_rows * ct.words_per_row()) {
    throw ShapeError("compressed payload does not match its dimensions");
  }
  DenseTile out = DenseTile::zeros(ct.phys_rows, ct.effective_cols());
  const std::size_t blocks = ct.phys_cols / n;
  for (std::size_t r = 0; r < ct.phys_rows; ++r) {
    for (std::size_t b = 0; b < blocks; ++b) {
      int prev = -1;
      for (unsigned s = 0; s < n; ++s) {
        const std::size_t slot = b * n + s;
        const int pos = static_cast<int>(ct.entry(r, slot));
        if (pos <= prev) {
          throw MetadataInvalid("row " + std::to_string(r) + ", block " + std::to_string(b) +
                                ": positions not strictly ascending");
        }
        prev = pos;
        out.at(r, b * ct.pattern.m + static_cast<std::size_t>(pos)) = ct.values[r * ct.phys_cols + slot];
      }
    }
  }
  return out;
}

/// Smallest power-of-two n (capped at m) that covers every block of `row`.
/// All-zero rows fold into 1:m.
inline NMPattern analyze_row_pattern(std::span<const std::uint32_t> row, unsigned m = 4) {
  NMPattern{1, m}.check();
  if (row.size() % m != 0) throw ShapeError("row length is not a multiple of m");
  unsigned worst = 0;
  for (std::size_t b = 0; b < row.size(); b += m) {
    unsigned count = 0;
    for (unsigned p = 0; p < m; ++p) count += row[b + p] != 0 ? 1u : 0u;
    worst = std::max(worst, count);
  }
  unsigned n = 1;
  while (n < worst) n <<= 1;
  return NMPattern{n, m};
}

/// Row-wise grouping of a tile. Grouped row space is ordered 4:4, 2:4, 1:4;
/// each run may end with synthetic all-zero rows so that 2:4 runs have even
/// length and 1:4 runs a length divisible by four.
struct RowWisePlan {
  struct Run {
    NMPattern pattern;
    std::size_t start = 0;   // first grouped row
    std::size_t length = 0;  // grouped rows including padding
    std::size_t padding = 0; // synthetic zero rows at the end of the run

    friend bool operator==(const Run&, const Run&) = default;
  };

  std::vector<NMPattern> row_patterns;  // per original row
  std::vector<std::size_t> permutation; // original row -> grouped row
  std::vector<Run> group_runs;

  std::size_t grouped_rows() const {
    return group_runs.empty() ? 0 : group_runs.back().start + group_runs.back().length;
  }

  friend bool operator==(const RowWisePlan&, const RowWisePlan&) = default;
};

/// Rows of a pattern must come in multiples of this to fill whole engine
/// columns (m / n rows share one column).
inline std::size_t rowwise_group_quantum(NMPattern p) { return p.m / p.n; }

/// Throws GroupingViolation unless runs are contiguous, one per pattern, and
/// each run length is a multiple of its quantum.
inline void check_pseudo_grouping(std::span<const RowWisePlan::Run> runs) {
  std::size_t next = runs.empty() ? 0 : runs.front().start;
  std::vector<NMPattern> seen;
  for (const auto& run : runs) {
    if (run.start != next) throw GroupingViolation("runs are not contiguous");
    if (std::find(seen.begin(), seen.end(), run.pattern) != seen.end()) {
      throw GroupingViolation("pattern " + run.pattern.to_string() + " appears in more than one run");
    }
    seen.push_back(run.pattern);
    if (run.length % rowwise_group_quantum(run.pattern) != 0) {
      throw GroupingViolation("run of " + run.pattern.to_string() + " has length " +
                              std::to_string(run.length) + ", not a multiple of " +
                              std::to_string(rowwise_group_quantum(run.pattern)));
    }
    next = run.start + run.length;
  }
}

struct RowWiseTile {
  RowWisePlan plan;
  std::vector<CompressedTile> runs;  // one per plan.group_runs entry
  std::size_t rows = 0;              // original tile shape
  std::size_t cols = 0;
};

inline RowWiseTile transform_unstructured_to_rowwise(const DenseTile& tile, std::size_t width = 64) {
  tile.check();
  if (tile.dtype != DType::kBf16) throw DtypeError("row-wise transform requires a BF16 tile");
  if (tile.cols != width) {
    throw ShapeError("row-wise transform expects " + std::to_string(width) + " columns, got " +
                     std::to_string(tile.cols));
  }
  RowWiseTile out;
  out.rows = tile.rows;
  out.cols = tile.cols;
  auto& plan = out.plan;
  plan.row_patterns.reserve(tile.rows);
  for (std::size_t r = 0; r < tile.rows; ++r) plan.row_patterns.push_back(analyze_row_pattern(tile.row(r), 4));
  plan.permutation.assign(tile.rows, 0);

  std::size_t next = 0;
  for (const NMPattern p : {kPattern4of4, kPattern2of4, kPattern1of4}) {
    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < tile.rows; ++r) {
      if (plan.row_patterns[r] == p) members.push_back(r);
    }
    if (members.empty()) continue;
    const std::size_t q = rowwise_group_quantum(p);
    const std::size_t length = (members.size() + q - 1) / q * q;
    DenseTile run_tile = DenseTile::zeros(length, tile.cols);
    for (std::size_t i = 0; i < members.size(); ++i) {
      plan.permutation[members[i]] = next + i;
      std::copy_n(tile.row(members[i]).begin(), tile.cols, run_tile.values.begin() + i * tile.cols);
    }
    plan.group_runs.push_back({p, next, length, length - members.size()});
    out.runs.push_back(compress_nm(run_tile, p));
    next += length;
  }
  return out;
}

/// Decompresses every run and undoes the grouping permutation.
inline DenseTile expand_rowwise(const RowWiseTile& rw) {
  const auto& plan = rw.plan;
  if (plan.group_runs.size() != rw.runs.size() || plan.permutation.size() != rw.rows) {
    throw ShapeError("row-wise plan does not match its runs");
  }
  DenseTile grouped = DenseTile::zeros(plan.grouped_rows(), rw.cols);
  for (std::size_t i = 0; i < rw.runs.size(); ++i) {
    const DenseTile run = decompress_nm(rw.runs[i]);
    if (run.cols != rw.cols || run.rows != plan.group_runs[i].length) {
      throw ShapeError("run " + std::to_string(i) + " has the wrong shape");
    }
    std::copy(run.values.begin(), run.values.end(),
              grouped.values.begin() + plan.group_runs[i].start * rw.cols);
  }
  DenseTile out = DenseTile::zeros(rw.rows, rw.cols);
  for (std::size_t r = 0; r < rw.rows; ++r) {
    const std::size_t g = plan.permutation[r];
    if (g >= grouped.rows) throw ShapeError("permutation entry out of range");
    std::copy_n(grouped.row(g).begin(), rw.cols, out.values.begin() + r * rw.cols);
  }
  return out;
}

}  // namespace vegeta
