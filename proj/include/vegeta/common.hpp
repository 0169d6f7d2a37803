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

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

namespace vegeta {

/// Base error. `code()` is a stable identifier (e.g. "BlockOverflow") that
/// tools print as a machine-parsable prefix.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define VEGETA_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

VEGETA_DEFINE_ERROR(ShapeError);
VEGETA_DEFINE_ERROR(DtypeError);
VEGETA_DEFINE_ERROR(PatternError);
VEGETA_DEFINE_ERROR(MetadataInvalid);
VEGETA_DEFINE_ERROR(ParseError);
VEGETA_DEFINE_ERROR(BadOperandClass);
VEGETA_DEFINE_ERROR(BadAlias);
VEGETA_DEFINE_ERROR(OutOfBounds);
VEGETA_DEFINE_ERROR(RowDescriptorInvalid);
VEGETA_DEFINE_ERROR(NotACompute);
VEGETA_DEFINE_ERROR(ConfigError);
VEGETA_DEFINE_ERROR(IllegalOpcodeForConfig);
VEGETA_DEFINE_ERROR(GroupingViolation);
VEGETA_DEFINE_ERROR(UnrollError);
VEGETA_DEFINE_ERROR(FormatError);
VEGETA_DEFINE_ERROR(IoError);

#undef VEGETA_DEFINE_ERROR

class BlockOverflow : public Error {
 public:
  BlockOverflow(std::size_t row, std::size_t block)
      : Error("BlockOverflow", "row " + std::to_string(row) + ", block " +
                                   std::to_string(block) +
                                   " has more non-zeros than the pattern allows"),
        row_(row),
        block_(block) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t block() const noexcept { return block_; }

 private:
  std::size_t row_;
  std::size_t block_;
};

// Little-endian scalar access into byte buffers.
template <typename T>
inline T load_le(const std::uint8_t* p) {
  static_assert(std::endian::native == std::endian::little,
                "big-endian hosts are not supported");
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
inline void store_le(std::uint8_t* p, T v) {
  static_assert(std::endian::native == std::endian::little,
                "big-endian hosts are not supported");
  std::memcpy(p, &v, sizeof(T));
}

constexpr bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr unsigned log2_exact(std::uint64_t v) {
  unsigned r = 0;
  while (v > 1) {
    v >>= 1;
    ++r;
  }
  return r;
}

}  // namespace vegeta
