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

// Text assembly. One instruction per line, `#` starts a comment:
//
//   tile_load_t  t2, [0x1000], 64        # dst, [addr], optional stride
//   tile_load_m  m2, [0x2000]
//   tile_store_t [0x3000], 64, t3        # [addr], optional stride, src
//   tile_gemm    t0, t1, t2
//   tile_spmm_u  t3, t2, u0, m2
//   tile_spmm_v  t3, t2, v0, m2
//   tile_spmm_r  u1, t2, u0, m2, [0x4000]
//
// Numbers are decimal or 0x-prefixed hex.

#pragma once

#include <cctype>
#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vegeta/isa.hpp"

namespace vegeta {

namespace detail {

struct Token {
  enum Kind { kWord, kNumber, kMemory } kind;
  std::string text;   // word text, or the inner text of a memory operand
  std::uint64_t value = 0;
  std::size_t col = 0;  // 1-based
};

[[noreturn]] inline void fail_at(std::size_t line, std::size_t col, const std::string& msg) {
  throw ParseError(std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline bool parse_number(std::string_view text, std::uint64_t& out) {
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    text.remove_prefix(2);
  }
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out, base);
  return ec == std::errc() && ptr == end;
}

/// Splits the operand list on top-level commas.
inline std::vector<Token> tokenize_operands(std::string_view text, std::size_t offset, std::size_t line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i <= text.size()) {
    std::size_t j = i;
    int depth = 0;
    while (j < text.size() && !(text[j] == ',' && depth == 0)) {
      if (text[j] == '[') ++depth;
      if (text[j] == ']') --depth;
      ++j;
    }
    const std::string_view raw = text.substr(i, j - i);
    std::size_t lead = 0;
    while (lead < raw.size() && std::isspace(static_cast<unsigned char>(raw[lead]))) ++lead;
    const std::size_t col = offset + i + lead + 1;
    const std::string item = trim(raw);
    if (item.empty()) fail_at(line, col, "empty operand");
    Token tok{Token::kWord, item, 0, col};
    if (item.front() == '[') {
      if (item.back() != ']') fail_at(line, col, "unterminated memory operand '" + item + "'");
      tok.kind = Token::kMemory;
      tok.text = trim(std::string_view(item).substr(1, item.size() - 2));
      if (!parse_number(tok.text, tok.value)) fail_at(line, col, "bad address '" + tok.text + "'");
    } else if (std::isdigit(static_cast<unsigned char>(item.front()))) {
      tok.kind = Token::kNumber;
      if (!parse_number(item, tok.value)) fail_at(line, col, "bad number '" + item + "'");
    }
    tokens.push_back(std::move(tok));
    if (j >= text.size()) break;
    i = j + 1;
  }
  return tokens;
}

inline RegisterId parse_register(const Token& tok, RegClass want, std::size_t line, std::string_view role) {
  const std::string where = std::to_string(line) + ":" + std::to_string(tok.col) + ": ";
  if (tok.kind != Token::kWord || tok.text.size() < 2) {
    fail_at(line, tok.col, std::string("expected ") + reg_class_letter(want) + "-register for " + std::string(role));
  }
  RegClass cls;
  switch (std::tolower(static_cast<unsigned char>(tok.text[0]))) {
    case 't': cls = RegClass::kT; break;
    case 'u': cls = RegClass::kU; break;
    case 'v': cls = RegClass::kV; break;
    case 'm': cls = RegClass::kM; break;
    default: fail_at(line, tok.col, "unknown register '" + tok.text + "'");
  }
  std::uint64_t idx = 0;
  if (!parse_number(std::string_view(tok.text).substr(1), idx)) fail_at(line, tok.col, "unknown register '" + tok.text + "'");
  if (cls != want) {
    throw BadOperandClass(where + std::string(role) + " must be a " + reg_class_letter(want) + "-register, got " +
                          tok.text);
  }
  if (idx >= reg_class_count(cls)) {
    if (cls == RegClass::kU || cls == RegClass::kV) {
      throw BadAlias(where + tok.text + " has no backing tile registers");
    }
    fail_at(line, tok.col, "no register named '" + tok.text + "'");
  }
  return RegisterId{cls, static_cast<std::uint8_t>(idx)};
}

inline Instruction parse_statement(std::string_view stmt, std::size_t stmt_col, std::size_t line) {
  std::size_t k = 0;
  while (k < stmt.size() && !std::isspace(static_cast<unsigned char>(stmt[k]))) ++k;
  const std::string word(stmt.substr(0, k));
  const auto op = opcode_from_mnemonic(word);
  if (!op) fail_at(line, stmt_col, "unknown mnemonic '" + word + "'");
  const auto& info = opcode_info(*op);

  std::vector<Token> ops;
  const std::string_view rest = stmt.substr(k);
  if (!trim(rest).empty()) ops = tokenize_operands(rest, stmt_col - 1 + k, line);

  auto need = [&](std::size_t lo, std::size_t hi) {
    if (ops.size() < lo || ops.size() > hi) {
      fail_at(line, stmt_col,
              word + " takes " + (lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi)) +
                  " operands, got " + std::to_string(ops.size()));
    }
  };
  auto memory = [&](const Token& t) {
    if (t.kind != Token::kMemory) fail_at(line, t.col, "expected memory operand [addr]");
    return t.value;
  };
  auto stride = [&](const Token& t) {
    if (t.kind != Token::kNumber) fail_at(line, t.col, "expected row stride");
    if (t.value > 0xFFFFFFFFu) fail_at(line, t.col, "row stride too large");
    return static_cast<std::uint32_t>(t.value);
  };

  switch (info.kind) {
    case OpKind::kLoad: {
      if (*op == Opcode::kTileLoadM) {
        need(2, 2);
        return Instruction::load(*op, parse_register(ops[0], info.reg, line, "dst"), memory(ops[1]));
      }
      need(2, 3);
      const auto dst = parse_register(ops[0], info.reg, line, "dst");
      const auto addr = memory(ops[1]);
      return Instruction::load(*op, dst, addr, ops.size() == 3 ? stride(ops[2]) : kTileRowBytes);
    }
    case OpKind::kStore: {
      need(2, 3);
      const auto addr = memory(ops[0]);
      const auto s = ops.size() == 3 ? stride(ops[1]) : static_cast<std::uint32_t>(kTileRowBytes);
      return Instruction::store(parse_register(ops.back(), info.reg, line, "src"), addr, s);
    }
    case OpKind::kCompute: {
      if (!info.needs_meta) {
        need(3, 3);
      } else if (info.needs_row_meta) {
        need(4, 5);
      } else {
        need(4, 4);
      }
      const auto dst = parse_register(ops[0], info.reg, line, "dst");
      const auto a = parse_register(ops[1], info.src1, line, "src1");
      const auto b = parse_register(ops[2], info.src2, line, "src2");
      std::optional<RegisterId> meta;
      if (info.needs_meta) meta = parse_register(ops[3], RegClass::kM, line, "metadata");
      std::optional<std::uint64_t> row_meta;
      if (ops.size() == 5) row_meta = memory(ops[4]);
      return Instruction::compute(*op, dst, a, b, meta, row_meta);
    }
  }
  fail_at(line, stmt_col, "unreachable");
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace detail

inline Program assemble(std::string_view text) {
  Program program;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t lead = 0;
    while (lead < line.size() && std::isspace(static_cast<unsigned char>(line[lead]))) ++lead;
    std::string_view stmt = line.substr(lead);
    while (!stmt.empty() && std::isspace(static_cast<unsigned char>(stmt.back()))) stmt.remove_suffix(1);
    if (!stmt.empty()) program.push(detail::parse_statement(stmt, lead + 1, line_no), line_no);
    if (eol >= text.size()) break;
    pos = eol + 1;
  }
  return program;
}

inline std::string disassemble(const Instruction& inst) {
  const auto& info = opcode_info(inst.opcode);
  std::string out(info.mnemonic);
  switch (info.kind) {
    case OpKind::kLoad:
      out += " " + inst.reg.name() + ", [" + detail::hex(inst.addr) + "]";
      if (inst.opcode != Opcode::kTileLoadM) out += ", " + std::to_string(inst.stride);
      break;
    case OpKind::kStore:
      out += " [" + detail::hex(inst.addr) + "], " + std::to_string(inst.stride) + ", " + inst.reg.name();
      break;
    case OpKind::kCompute:
      out += " " + inst.reg.name() + ", " + inst.src1.name() + ", " + inst.src2.name();
      if (inst.meta) out += ", " + inst.meta->name();
      if (inst.row_meta_addr) out += ", [" + detail::hex(*inst.row_meta_addr) + "]";
      break;
  }
  return out;
}

inline std::string disassemble(const Program& program) {
  std::string out;
  for (const auto& inst : program.instructions) {
    out += disassemble(inst);
    out += '\n';
  }
  return out;
}

}  // namespace vegeta
