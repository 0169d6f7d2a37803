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

// Tile file format (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "VGTA"
//   4       1     version (1)
//   5       1     dtype code: 0 = BF16, 1 = FP32, 2 = N:M compressed BF16
//   6       2     reserved (0)
//   8       4     rows
//   12      4     cols
//   16      ...   dense: rows*cols scalars, row-major
//
// Compressed files store the effective shape in the header, then
//   n u8, m u8, phys_rows u32, phys_cols u32,
//   phys_rows*phys_cols BF16 values, then phys_rows*W u64 metadata words
//   with W = max(1, ceil(phys_cols*log2(m)/64)).

#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include "vegeta/common.hpp"
#include "vegeta/nm_sparsity.hpp"

namespace vegeta {

inline constexpr std::uint8_t kTileFileVersion = 1;
inline constexpr std::uint8_t kCompressedDtypeCode = 2;
inline constexpr std::size_t kTileHeaderBytes = 16;

using TileFile = std::variant<DenseTile, CompressedTile>;

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    const auto at = bytes_.size();
    bytes_.resize(at + sizeof(T));
    store_le<T>(bytes_.data() + at, v);
  }
  void put_magic() { bytes_.insert(bytes_.end(), {'V', 'G', 'T', 'A'}); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw FormatError("tile file truncated at byte " + std::to_string(pos_));
    T v = load_le<T>(bytes_.data() + pos_);
    pos_ += sizeof(T);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline void put_header(ByteWriter& w, std::uint8_t dtype_code, std::size_t rows, std::size_t cols) {
  w.put_magic();
  w.put<std::uint8_t>(kTileFileVersion);
  w.put<std::uint8_t>(dtype_code);
  w.put<std::uint16_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rows));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cols));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_tile(const DenseTile& tile) {
  tile.check();
  detail::ByteWriter w;
  detail::put_header(w, static_cast<std::uint8_t>(tile.dtype), tile.rows, tile.cols);
  for (auto v : tile.values) {
    if (tile.dtype == DType::kBf16) {
      w.put<std::uint16_t>(static_cast<std::uint16_t>(v));
    } else {
      w.put<std::uint32_t>(v);
    }
  }
  return w.take();
}

inline std::vector<std::uint8_t> encode_tile(const CompressedTile& ct) {
  detail::ByteWriter w;
  detail::put_header(w, kCompressedDtypeCode, ct.phys_rows, ct.effective_cols());
  w.put<std::uint8_t>(static_cast<std::uint8_t>(ct.pattern.n));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(ct.pattern.m));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ct.phys_rows));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ct.phys_cols));
  for (auto v : ct.values) w.put<std::uint16_t>(v);
  for (auto m : ct.metadata) w.put<std::uint64_t>(m);
  return w.take();
}

inline TileFile decode_tile(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const char magic[4] = {static_cast<char>(r.get<std::uint8_t>()), static_cast<char>(r.get<std::uint8_t>()),
                         static_cast<char>(r.get<std::uint8_t>()), static_cast<char>(r.get<std::uint8_t>())};
  if (std::string(magic, 4) != "VGTA") throw FormatError("bad magic, not a tile file");
  const auto version = r.get<std::uint8_t>();
  if (version != kTileFileVersion) throw FormatError("unsupported tile file version " + std::to_string(version));
  const auto code = r.get<std::uint8_t>();
  r.get<std::uint16_t>();
  const std::size_t rows = r.get<std::uint32_t>();
  const std::size_t cols = r.get<std::uint32_t>();

  const std::uint64_t remaining = bytes.size() - r.pos();
  if (code == 0 || code == 1) {
    if (static_cast<std::uint64_t>(rows) * cols * (code == 0 ? 2 : 4) != remaining) {
      throw FormatError("payload holds " + std::to_string(remaining) + " bytes, header says " + std::to_string(rows) +
                        "x" + std::to_string(cols));
    }
    DenseTile t = DenseTile::zeros(rows, cols, static_cast<DType>(code));
    for (auto& v : t.values) v = code == 0 ? r.get<std::uint16_t>() : r.get<std::uint32_t>();
    if (!r.done()) throw FormatError("trailing bytes after tile payload");
    return t;
  }
  if (code != kCompressedDtypeCode) throw FormatError("unknown dtype code " + std::to_string(code));

  CompressedTile ct;
  ct.pattern.n = r.get<std::uint8_t>();
  ct.pattern.m = r.get<std::uint8_t>();
  try {
    ct.pattern.check();
  } catch (const PatternError& e) {
    throw FormatError(e.what());
  }
  ct.phys_rows = r.get<std::uint32_t>();
  ct.phys_cols = r.get<std::uint32_t>();
  if (ct.phys_cols % ct.pattern.n != 0 || ct.phys_rows != rows || ct.effective_cols() != cols) {
    throw FormatError("compressed tile header disagrees with its physical dimensions");
  }
  const std::uint64_t want = static_cast<std::uint64_t>(ct.phys_rows) * ct.phys_cols * 2 +
                             static_cast<std::uint64_t>(ct.phys_rows) * ct.words_per_row() * 8;
  if (want != bytes.size() - r.pos()) throw FormatError("compressed payload size does not match its dimensions");
  ct.values.resize(ct.phys_rows * ct.phys_cols);
  for (auto& v : ct.values) v = r.get<std::uint16_t>();
  ct.metadata.resize(ct.phys_rows * ct.words_per_row());
  for (auto& m : ct.metadata) m = r.get<std::uint64_t>();
  if (!r.done()) throw FormatError("trailing bytes after compressed payload");
  return ct;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path + ": write failed");
}

inline TileFile read_tile_file(const std::string& path) {
  try {
    return decode_tile(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_tile_file(const std::string& path, const DenseTile& tile) { write_file_bytes(path, encode_tile(tile)); }
inline void write_tile_file(const std::string& path, const CompressedTile& ct) { write_file_bytes(path, encode_tile(ct)); }

}  // namespace vegeta
