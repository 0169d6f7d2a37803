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


// Random compute-instruction cases with their dense reference operands.
// Register contents are written byte by byte from the layout rules, not
// through the emulator's accessors.

#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "vegeta/emulator.hpp"

namespace cases {

using vegeta::ArchState;
using vegeta::Instruction;
using vegeta::Opcode;
using vegeta::RegisterId;

struct ComputeCase {
  Instruction inst;
  std::size_t rows = 16;
  std::size_t k = 32;
  std::vector<std::uint16_t> a_dense;  // rows x k
  std::vector<std::uint16_t> b;        // k x 16
  std::vector<float> c;                // rows x 16
  std::vector<unsigned> row_n;         // tile_spmm_r only

  std::vector<float> expected() const { return oracle::gemm(a_dense, b, c, rows, 16, k); }
};

inline void put16(ArchState& s, RegisterId r, std::size_t elem, std::uint16_t v) {
  auto bytes = s.bytes(r);
  bytes[2 * elem] = static_cast<std::uint8_t>(v);
  bytes[2 * elem + 1] = static_cast<std::uint8_t>(v >> 8);
}

inline void put_f32(ArchState& s, RegisterId r, std::size_t elem, float f) {
  const std::uint32_t u = oracle::float_to_bits(f);
  auto bytes = s.bytes(r);
  for (int i = 0; i < 4; ++i) bytes[4 * elem + i] = static_cast<std::uint8_t>(u >> (8 * i));
}

inline float get_f32(const ArchState& s, RegisterId r, std::size_t elem) {
  const auto bytes = s.bytes(r);
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(bytes[4 * elem + i]) << (8 * i);
  return oracle::bits_to_float(u);
}

/// Sets the 2-bit position of value slot `slot` in mreg `m`.
inline void put_index(ArchState& s, RegisterId m, std::size_t slot, unsigned pos) {
  auto bytes = s.bytes(m);
  const std::size_t bit = 2 * slot;
  bytes[bit / 8] = static_cast<std::uint8_t>(bytes[bit / 8] | (pos << (bit % 8)));
}

inline std::uint16_t int_value(std::mt19937_64& rng) {
  return oracle::bf16_int(std::uniform_int_distribution<int>(-8, 8)(rng));
}

/// Finite BF16 with a modest exponent so no sum overflows.
inline std::uint16_t general_value(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> sign(0, 1), exp(120, 134), man(0, 127);
  return static_cast<std::uint16_t>((sign(rng) << 15) | (exp(rng) << 7) | man(rng));
}

inline std::vector<unsigned> random_row_patterns(std::mt19937_64& rng) {
  std::vector<unsigned> rows;
  std::size_t slots = 0;
  const unsigned choices[3] = {1, 2, 4};
  std::uniform_int_distribution<int> pick(0, 2);
  std::bernoulli_distribution stop(0.1);
  while (rows.size() < 32) {
    if (rows.size() >= 8 && stop(rng)) break;
    const std::size_t must_follow = rows.size() < 7 ? (7 - rows.size()) * 16 : 0;
    std::vector<unsigned> ok;
    for (unsigned n : choices) {
      if (slots + 16 * n + must_follow <= 512) ok.push_back(n);
    }
    if (ok.empty()) break;
    const unsigned n = ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)];
    rows.push_back(n);
    slots += 16 * n;
  }
  return rows;
}

inline std::uint64_t descriptor_word(const std::vector<unsigned>& row_n) {
  std::uint64_t w = 0;
  for (std::size_t i = 0; i < row_n.size(); ++i) {
    const std::uint64_t code = row_n[i] == 1 ? 1 : row_n[i] == 2 ? 2 : 3;
    w |= code << (2 * i);
  }
  return w;
}

inline constexpr std::uint64_t kDescriptorAddr = 0x100;

/// Builds one random case for `op` and loads it into `s`. Operand values are
/// integers in [-8, 8] unless `general` is set.
inline ComputeCase make_case(Opcode op, std::mt19937_64& rng, ArchState& s, bool general = false,
                             std::vector<unsigned> row_n = {}) {
  auto value = [&] { return general ? general_value(rng) : int_value(rng); };
  ComputeCase cc;
  const RegisterId m2 = RegisterId::m(2);
  std::fill(s.bytes(m2).begin(), s.bytes(m2).end(), std::uint8_t{0});
  RegisterId dst = RegisterId::t(5), a = RegisterId::t(2), b = RegisterId::t(0);
  std::uniform_int_distribution<int> cval(-64, 64);

  // Per row: n non-zeros per block of 4 and the row's first value slot.
  std::vector<unsigned> n_of_row;
  std::vector<std::size_t> slot_base;
  switch (op) {
    case Opcode::kTileGemm:
      cc.k = 32;
      n_of_row.assign(16, 4);
      break;
    case Opcode::kTileSpmmU:
      cc.k = 64;
      b = RegisterId::u(0);
      n_of_row.assign(16, 2);
      break;
    case Opcode::kTileSpmmV:
      cc.k = 128;
      a = RegisterId::t(4);
      b = RegisterId::v(0);
      n_of_row.assign(16, 1);
      break;
    case Opcode::kTileSpmmR:
      cc.k = 64;
      dst = RegisterId::u(2);
      a = RegisterId::t(6);
      b = RegisterId::u(0);
      n_of_row = row_n.empty() ? random_row_patterns(rng) : row_n;
      cc.row_n = n_of_row;
      break;
    default:
      break;
  }
  cc.rows = n_of_row.size();
  std::size_t base = 0;
  for (std::size_t r = 0; r < cc.rows; ++r) {
    slot_base.push_back(op == Opcode::kTileSpmmR ? base : r * 32);
    base += 16 * n_of_row[r];
  }

  cc.a_dense.assign(cc.rows * cc.k, 0);
  for (std::size_t r = 0; r < cc.rows; ++r) {
    const unsigned n = n_of_row[r];
    for (std::size_t blk = 0; blk < cc.k / 4; ++blk) {
      unsigned pos[4] = {0, 1, 2, 3};
      std::shuffle(pos, pos + 4, rng);
      std::sort(pos, pos + n);
      for (unsigned i = 0; i < n; ++i) {
        const std::uint16_t v = value();
        const std::size_t slot = slot_base[r] + blk * n + i;
        cc.a_dense[r * cc.k + blk * 4 + pos[i]] = v;
        put16(s, a, slot, v);
        if (op != Opcode::kTileGemm) put_index(s, m2, slot, pos[i]);
      }
    }
  }
  cc.b.resize(cc.k * 16);
  for (std::size_t kk = 0; kk < cc.k; ++kk) {
    for (std::size_t n = 0; n < 16; ++n) {
      const std::uint16_t v = value();
      cc.b[kk * 16 + n] = v;
      put16(s, b, n * cc.k + kk, v);
    }
  }
  cc.c.resize(cc.rows * 16);
  for (std::size_t i = 0; i < cc.c.size(); ++i) {
    cc.c[i] = general ? oracle::bf16_value(general_value(rng)) : static_cast<float>(cval(rng));
    put_f32(s, dst, i, cc.c[i]);
  }

  if (op == Opcode::kTileGemm) {
    cc.inst = Instruction::compute(op, dst, a, b);
  } else if (op == Opcode::kTileSpmmR) {
    std::uint8_t d[8];
    const std::uint64_t w = descriptor_word(n_of_row);
    for (int i = 0; i < 8; ++i) d[i] = static_cast<std::uint8_t>(w >> (8 * i));
    s.memory.write(kDescriptorAddr, d);
    cc.inst = Instruction::compute(op, dst, a, b, m2, kDescriptorAddr);
  } else {
    cc.inst = Instruction::compute(op, dst, a, b, m2);
  }
  return cc;
}

inline std::vector<float> result(const ArchState& s, const ComputeCase& cc) {
  std::vector<float> out(cc.rows * 16);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get_f32(s, cc.inst.reg, i);
  return out;
}

inline bool bit_identical(const std::vector<float>& x, const std::vector<float>& y) {
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (oracle::float_to_bits(x[i]) != oracle::float_to_bits(y[i])) return false;
  }
  return true;
}

}  // namespace cases
