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

// Architectural registers and the tile instruction set.
//
// Register file: eight 1 KB tile registers t0-t7 (16 rows x 64 B), four
// 2 KB aliases u0-u3 (u_i = t_2i || t_2i+1), two 4 KB aliases v0-v1
// (v_i = u_2i || u_2i+1) and eight 128 B metadata registers m0-m7.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vegeta/common.hpp"

namespace vegeta {

inline constexpr std::size_t kTregBytes = 1024;
inline constexpr std::size_t kTregCount = 8;
inline constexpr std::size_t kTileRowBytes = 64;
inline constexpr std::size_t kTileRows = 16;
inline constexpr std::size_t kMregBytes = 128;
inline constexpr std::size_t kMregCount = 8;
inline constexpr std::size_t kRowDescriptorBytes = 8;

enum class RegClass : std::uint8_t { kT, kU, kV, kM };

constexpr std::size_t reg_class_count(RegClass c) {
  switch (c) {
    case RegClass::kT: return 8;
    case RegClass::kU: return 4;
    case RegClass::kV: return 2;
    case RegClass::kM: return 8;
  }
  return 0;
}

constexpr char reg_class_letter(RegClass c) {
  switch (c) {
    case RegClass::kT: return 't';
    case RegClass::kU: return 'u';
    case RegClass::kV: return 'v';
    case RegClass::kM: return 'm';
  }
  return '?';
}

struct RegisterId {
  RegClass cls = RegClass::kT;
  std::uint8_t index = 0;

  static constexpr RegisterId t(unsigned i) { return {RegClass::kT, static_cast<std::uint8_t>(i)}; }
  static constexpr RegisterId u(unsigned i) { return {RegClass::kU, static_cast<std::uint8_t>(i)}; }
  static constexpr RegisterId v(unsigned i) { return {RegClass::kV, static_cast<std::uint8_t>(i)}; }
  static constexpr RegisterId m(unsigned i) { return {RegClass::kM, static_cast<std::uint8_t>(i)}; }

  bool valid() const { return index < reg_class_count(cls); }
  bool is_tile() const { return cls != RegClass::kM; }

  /// Number of 1 KB tile registers covered by this register (tile classes).
  unsigned treg_count() const {
    switch (cls) {
      case RegClass::kT: return 1;
      case RegClass::kU: return 2;
      case RegClass::kV: return 4;
      case RegClass::kM: return 0;
    }
    return 0;
  }
  unsigned first_treg() const { return index * treg_count(); }
  std::size_t bytes() const { return is_tile() ? treg_count() * kTregBytes : kMregBytes; }

  std::string name() const { return std::string(1, reg_class_letter(cls)) + std::to_string(index); }

  friend constexpr bool operator==(RegisterId, RegisterId) = default;
};

enum class Opcode : std::uint8_t {
  kTileLoadT,
  kTileLoadU,
  kTileLoadV,
  kTileLoadM,
  kTileStoreT,
  kTileGemm,
  kTileSpmmU,
  kTileSpmmV,
  kTileSpmmR,
};

inline constexpr std::array<Opcode, 9> kAllOpcodes = {
    Opcode::kTileLoadT, Opcode::kTileLoadU, Opcode::kTileLoadV,  Opcode::kTileLoadM, Opcode::kTileStoreT,
    Opcode::kTileGemm,  Opcode::kTileSpmmU, Opcode::kTileSpmmV, Opcode::kTileSpmmR,
};

enum class OpKind : std::uint8_t { kLoad, kStore, kCompute };

/// Operand-class signature of one opcode.
struct OpcodeInfo {
  Opcode opcode;
  std::string_view mnemonic;
  OpKind kind;
  RegClass reg;   // load dst, store src, or compute dst/src0
  RegClass src1;  // compute only: A tile
  RegClass src2;  // compute only: B tile
  bool needs_meta = false;
  bool needs_row_meta = false;
  std::size_t rows = 0;  // 64-byte rows moved by a load/store
};

inline constexpr std::array<OpcodeInfo, 9> kOpcodeTable = {{
    {Opcode::kTileLoadT, "tile_load_t", OpKind::kLoad, RegClass::kT, RegClass::kT, RegClass::kT, false, false, 16},
    {Opcode::kTileLoadU, "tile_load_u", OpKind::kLoad, RegClass::kU, RegClass::kT, RegClass::kT, false, false, 32},
    {Opcode::kTileLoadV, "tile_load_v", OpKind::kLoad, RegClass::kV, RegClass::kT, RegClass::kT, false, false, 64},
    {Opcode::kTileLoadM, "tile_load_m", OpKind::kLoad, RegClass::kM, RegClass::kT, RegClass::kT, false, false, 2},
    {Opcode::kTileStoreT, "tile_store_t", OpKind::kStore, RegClass::kT, RegClass::kT, RegClass::kT, false, false, 16},
    {Opcode::kTileGemm, "tile_gemm", OpKind::kCompute, RegClass::kT, RegClass::kT, RegClass::kT, false, false, 0},
    {Opcode::kTileSpmmU, "tile_spmm_u", OpKind::kCompute, RegClass::kT, RegClass::kT, RegClass::kU, true, false, 0},
    {Opcode::kTileSpmmV, "tile_spmm_v", OpKind::kCompute, RegClass::kT, RegClass::kT, RegClass::kV, true, false, 0},
    {Opcode::kTileSpmmR, "tile_spmm_r", OpKind::kCompute, RegClass::kU, RegClass::kT, RegClass::kU, true, true, 0},
}};

inline const OpcodeInfo& opcode_info(Opcode op) { return kOpcodeTable[static_cast<std::size_t>(op)]; }

inline std::string_view mnemonic(Opcode op) { return opcode_info(op).mnemonic; }

inline std::optional<Opcode> opcode_from_mnemonic(std::string_view text) {
  for (const auto& info : kOpcodeTable) {
    if (info.mnemonic == text) return info.opcode;
  }
  return std::nullopt;
}

inline bool is_compute(Opcode op) { return opcode_info(op).kind == OpKind::kCompute; }
inline bool is_load(Opcode op) { return opcode_info(op).kind == OpKind::kLoad; }
inline bool is_store(Opcode op) { return opcode_info(op).kind == OpKind::kStore; }
inline bool is_tile_load(Opcode op) { return is_load(op) && op != Opcode::kTileLoadM; }

struct Instruction {
  Opcode opcode = Opcode::kTileLoadT;
  RegisterId reg;  // load dst, store src, compute dst/src0
  RegisterId src1;
  RegisterId src2;
  std::optional<RegisterId> meta;
  std::uint64_t addr = 0;
  std::uint32_t stride = static_cast<std::uint32_t>(kTileRowBytes);
  std::optional<std::uint64_t> row_meta_addr;

  static Instruction load(Opcode op, RegisterId dst, std::uint64_t addr, std::uint32_t stride = kTileRowBytes) {
    Instruction i;
    i.opcode = op;
    i.reg = dst;
    i.addr = addr;
    i.stride = op == Opcode::kTileLoadM ? 0 : stride;
    return i;
  }
  static Instruction store(RegisterId src, std::uint64_t addr, std::uint32_t stride = kTileRowBytes) {
    Instruction i;
    i.opcode = Opcode::kTileStoreT;
    i.reg = src;
    i.addr = addr;
    i.stride = stride;
    return i;
  }
  static Instruction compute(Opcode op, RegisterId dst, RegisterId a, RegisterId b,
                             std::optional<RegisterId> meta = std::nullopt,
                             std::optional<std::uint64_t> row_meta_addr = std::nullopt) {
    Instruction i;
    i.opcode = op;
    i.reg = dst;
    i.src1 = a;
    i.src2 = b;
    i.meta = meta;
    i.stride = 0;
    i.row_meta_addr = row_meta_addr;
    return i;
  }

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Program {
  std::vector<Instruction> instructions;
  std::vector<std::size_t> source_lines;  // parallel to instructions when assembled; may be empty

  std::size_t size() const { return instructions.size(); }
  bool empty() const { return instructions.empty(); }

  void push(const Instruction& inst, std::size_t line = 0) {
    instructions.push_back(inst);
    source_lines.push_back(line);
  }

  std::size_t line_of(std::size_t index) const {
    return index < source_lines.size() ? source_lines[index] : 0;
  }

  /// Semantic equality: source positions are not part of a program's meaning.
  friend bool operator==(const Program& a, const Program& b) { return a.instructions == b.instructions; }
};

struct Diagnostic {
  std::size_t index = 0;  // instruction index
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline std::vector<Diagnostic> validate_instruction(const Instruction& inst, std::size_t index) {
  std::vector<Diagnostic> out;
  const auto& info = opcode_info(inst.opcode);
  auto report = [&](std::string msg) { out.push_back({index, std::string(info.mnemonic) + ": " + std::move(msg)}); };
  auto check_reg = [&](const RegisterId& r, RegClass want, std::string_view role) {
    if (r.cls != want) {
      report(std::string(role) + " must be a " + reg_class_letter(want) + "-register, got " + r.name());
    } else if (!r.valid()) {
      report(std::string(role) + " " + r.name() + " does not exist");
    }
  };

  check_reg(inst.reg, info.reg, info.kind == OpKind::kStore ? "src" : "dst");
  if (info.kind == OpKind::kCompute) {
    check_reg(inst.src1, info.src1, "src1");
    check_reg(inst.src2, info.src2, "src2");
    if (info.needs_meta) {
      if (!inst.meta) {
        report("missing metadata register");
      } else {
        check_reg(*inst.meta, RegClass::kM, "metadata");
      }
    } else if (inst.meta) {
      report("takes no metadata register");
    }
  } else if (inst.opcode != Opcode::kTileLoadM && inst.stride < kTileRowBytes) {
    report("row stride " + std::to_string(inst.stride) + " is below the 64-byte row size");
  }
  if (info.needs_row_meta && !inst.row_meta_addr) report("missing row-pattern descriptor address");
  if (!info.needs_row_meta && inst.row_meta_addr) report("takes no row-pattern descriptor");
  return out;
}

/// Empty iff every operand class, alias base, stride and required field is
/// legal.
inline std::vector<Diagnostic> validate_program(const Program& program) {
  std::vector<Diagnostic> out;
  for (std::size_t i = 0; i < program.instructions.size(); ++i) {
    auto d = validate_instruction(program.instructions[i], i);
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

}  // namespace vegeta
