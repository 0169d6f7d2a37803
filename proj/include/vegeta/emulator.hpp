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

// Functional emulator.
//
// Register payload layouts:
//   A (src1, treg)  16x32 BF16 row-major. For tile_spmm_u / tile_spmm_v the
//                   32 values of a row are the stored slots of a 2:4 / 1:4
//                   row whose positions live in the matching mreg row.
//   B (src2)        stored transposed: B[k][n] is BF16 element n*K + k of
//                   the register, K = 32 (treg), 64 (ureg) or 128 (vreg).
//   C (dst)         FP32 row-major, 16 columns; 16 rows in a treg, up to 32
//                   rows in the ureg used by tile_spmm_r.
//   mreg            16 little-endian 64-bit words; slot j of row r is bits
//                   [2j, 2j+1] of word r.
//
// tile_spmm_r reads an 8-byte row descriptor from memory: row i uses bits
// [2i, 2i+1] (01 = 1:4, 10 = 2:4, 11 = 4:4, 00 = inactive, tail only). Active
// rows consume the treg's 512 value slots (and the mreg's 512 position
// entries) contiguously: 16*n slots for an n:4 row. C rows >= R are left
// untouched.
//
// Arithmetic: each BF16 x BF16 product is formed in FP32 (exact for
// normal-range operands) and accumulated into C in FP32 round-to-nearest-even,
// in ascending effective-k order over the stored slots.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vegeta/bf16.hpp"
#include "vegeta/common.hpp"
#include "vegeta/isa.hpp"
#include "vegeta/nm_sparsity.hpp"
#include "vegeta/tile_file.hpp"

namespace vegeta {

inline constexpr std::size_t kDefaultMemoryBytes = std::size_t{256} << 20;
inline constexpr std::uint64_t kUsefulMacsPerTileOp = 16 * 16 * 32;

/// Zero-initialised byte-addressable memory with a fixed capacity. Backing
/// storage grows on first write, reads past it return zeros.
class FlatMemory {
 public:
  explicit FlatMemory(std::size_t capacity = kDefaultMemoryBytes) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }

  void check_range(std::uint64_t addr, std::size_t len) const {
    if (addr > capacity_ || len > capacity_ - addr) {
      throw OutOfBounds("access of " + std::to_string(len) + " bytes at 0x" + to_hex(addr) +
                        " exceeds memory size " + std::to_string(capacity_));
    }
  }

  void read(std::uint64_t addr, std::span<std::uint8_t> out) const {
    check_range(addr, out.size());
    std::fill(out.begin(), out.end(), std::uint8_t{0});
    if (addr >= bytes_.size()) return;
    const auto n = std::min<std::size_t>(out.size(), bytes_.size() - addr);
    std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(addr), n, out.begin());
  }

  void write(std::uint64_t addr, std::span<const std::uint8_t> in) {
    check_range(addr, in.size());
    if (addr + in.size() > bytes_.size()) bytes_.resize(addr + in.size(), 0);
    std::copy(in.begin(), in.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(addr));
  }

  std::uint64_t read_u64(std::uint64_t addr) const {
    std::array<std::uint8_t, 8> b{};
    read(addr, b);
    return load_le<std::uint64_t>(b.data());
  }

  friend bool operator==(const FlatMemory& a, const FlatMemory& b) {
    if (a.capacity_ != b.capacity_) return false;
    const auto& longer = a.bytes_.size() >= b.bytes_.size() ? a.bytes_ : b.bytes_;
    const auto& shorter = a.bytes_.size() >= b.bytes_.size() ? b.bytes_ : a.bytes_;
    if (!std::equal(shorter.begin(), shorter.end(), longer.begin())) return false;
    return std::all_of(longer.begin() + static_cast<std::ptrdiff_t>(shorter.size()), longer.end(),
                       [](std::uint8_t v) { return v == 0; });
  }

 private:
  static std::string to_hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
  }

  std::size_t capacity_;
  std::vector<std::uint8_t> bytes_;
};

/// Memory cap from VEGETA_MEM_MB, falling back to the 256 MB default.
inline std::size_t memory_bytes_from_env() {
  if (const char* env = std::getenv("VEGETA_MEM_MB")) {
    char* end = nullptr;
    const unsigned long long mb = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && mb > 0) return static_cast<std::size_t>(mb) << 20;
    throw ConfigError(std::string("VEGETA_MEM_MB must be a positive integer, got '") + env + "'");
  }
  return kDefaultMemoryBytes;
}

struct ArchState {
  std::array<std::uint8_t, kTregCount * kTregBytes> tiles{};
  std::array<std::uint8_t, kMregCount * kMregBytes> mregs{};
  FlatMemory memory;
  std::uint64_t retired = 0;

  explicit ArchState(std::size_t memory_bytes = kDefaultMemoryBytes) : memory(memory_bytes) {}

  /// Byte view of any register; U and V views alias the T storage.
  std::span<std::uint8_t> bytes(RegisterId r) {
    if (!r.valid()) throw BadAlias("register " + r.name() + " does not exist");
    if (r.cls == RegClass::kM) return std::span(mregs).subspan(r.index * kMregBytes, kMregBytes);
    return std::span(tiles).subspan(r.first_treg() * kTregBytes, r.bytes());
  }
  std::span<const std::uint8_t> bytes(RegisterId r) const { return const_cast<ArchState*>(this)->bytes(r); }

  Bf16 bf16(RegisterId r, std::size_t element) const {
    return Bf16{load_le<std::uint16_t>(bytes(r).data() + element * 2)};
  }
  float fp32(RegisterId r, std::size_t element) const { return load_le<float>(bytes(r).data() + element * 4); }
  void set_bf16(RegisterId r, std::size_t element, Bf16 v) { store_le<std::uint16_t>(bytes(r).data() + element * 2, v.bits); }
  void set_fp32(RegisterId r, std::size_t element, float v) { store_le<float>(bytes(r).data() + element * 4, v); }
  std::uint64_t meta_word(RegisterId m, std::size_t row) const { return load_le<std::uint64_t>(bytes(m).data() + row * 8); }
  void set_meta_word(RegisterId m, std::size_t row, std::uint64_t w) { store_le<std::uint64_t>(bytes(m).data() + row * 8, w); }
};

/// Per-row pattern list decoded from a tile_spmm_r descriptor.
struct RowDescriptor {
  std::vector<unsigned> row_n;  // non-zeros per block for each active row

  std::size_t rows() const { return row_n.size(); }
  std::size_t slots() const {
    std::size_t s = 0;
    for (auto n : row_n) s += 16 * n;
    return s;
  }

  static RowDescriptor decode(std::uint64_t word) {
    RowDescriptor d;
    bool ended = false;
    for (unsigned i = 0; i < 32; ++i) {
      const unsigned code = static_cast<unsigned>((word >> (2 * i)) & 3u);
      if (code == 0) {
        ended = true;
        continue;
      }
      if (ended) throw RowDescriptorInvalid("row " + std::to_string(i) + " is active after an inactive row");
      d.row_n.push_back(code == 1 ? 1u : code == 2 ? 2u : 4u);
    }
    if (d.rows() < 8 || d.rows() > 32) {
      throw RowDescriptorInvalid("descriptor activates " + std::to_string(d.rows()) + " rows, need 8 to 32");
    }
    if (d.slots() > 512) {
      throw RowDescriptorInvalid("descriptor needs " + std::to_string(d.slots()) + " value slots, a treg holds 512");
    }
    return d;
  }

  std::uint64_t encode() const {
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < row_n.size(); ++i) {
      const std::uint64_t code = row_n[i] == 1 ? 1 : row_n[i] == 2 ? 2 : 3;
      w |= code << (2 * i);
    }
    return w;
  }

  static RowDescriptor from_patterns(std::span<const NMPattern> rows) {
    RowDescriptor d;
    for (const auto& p : rows) d.row_n.push_back(p.n);
    return d;
  }
};

/// 8192 for every full tile compute op.
inline std::uint64_t useful_mac_count(const Instruction& inst) {
  if (!is_compute(inst.opcode)) throw NotACompute(std::string(mnemonic(inst.opcode)) + " performs no MACs");
  return kUsefulMacsPerTileOp;
}

/// Exact count for tile_spmm_r given its row descriptor: 16 outputs per row
/// times the row's stored slots.
inline std::uint64_t useful_mac_count(const Instruction& inst, const RowDescriptor& rows) {
  if (inst.opcode != Opcode::kTileSpmmR) return useful_mac_count(inst);
  return 16 * static_cast<std::uint64_t>(rows.slots());
}

struct StepResult {
  Opcode opcode;
  std::uint64_t useful_macs = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
};

namespace detail {

inline void check_ascending(std::span<const unsigned> pos, std::size_t row, std::size_t block) {
  for (std::size_t i = 1; i < pos.size(); ++i) {
    if (pos[i] <= pos[i - 1]) {
      throw MetadataInvalid("row " + std::to_string(row) + ", block " + std::to_string(block) +
                            ": positions not strictly ascending");
    }
  }
}

/// C(rows x 16) += A x B with A given as slots (value, effective k) per row.
/// `a_slots[r]` lists (value, k) in ascending k.
struct SparseRow {
  std::vector<std::pair<Bf16, unsigned>> slots;
};

inline void accumulate_rows(const ArchState& s, std::span<const SparseRow> rows, RegisterId b, std::size_t k_eff,
                            std::span<float> c) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t n = 0; n < 16; ++n) {
      float acc = c[r * 16 + n];
      for (const auto& [a, k] : rows[r].slots) {
        const float prod = a.to_float() * s.bf16(b, n * k_eff + k).to_float();
        acc += prod;
      }
      c[r * 16 + n] = acc;
    }
  }
}

/// Decodes the A operand of a compute op into per-row slot lists.
inline std::vector<SparseRow> decode_a(const ArchState& s, const Instruction& inst,
                                       const std::optional<RowDescriptor>& desc) {
  std::vector<SparseRow> rows;
  const RegisterId a = inst.src1;
  switch (inst.opcode) {
    case Opcode::kTileGemm: {
      rows.resize(16);
      for (std::size_t r = 0; r < 16; ++r) {
        for (unsigned k = 0; k < 32; ++k) rows[r].slots.emplace_back(s.bf16(a, r * 32 + k), k);
      }
      break;
    }
    case Opcode::kTileSpmmU:
    case Opcode::kTileSpmmV: {
      const unsigned n = inst.opcode == Opcode::kTileSpmmU ? 2 : 1;
      rows.resize(16);
      for (std::size_t r = 0; r < 16; ++r) {
        const std::uint64_t word = s.meta_word(*inst.meta, r);
        std::array<unsigned, 2> pos{};
        for (unsigned slot = 0; slot < 32; ++slot) {
          const unsigned p = static_cast<unsigned>((word >> (2 * slot)) & 3u);
          const unsigned block = slot / n;
          pos[slot % n] = p;
          if (slot % n == n - 1) check_ascending(std::span(pos).first(n), r, block);
          rows[r].slots.emplace_back(s.bf16(a, r * 32 + slot), block * 4 + p);
        }
      }
      break;
    }
    case Opcode::kTileSpmmR: {
      rows.resize(desc->rows());
      std::size_t offset = 0;
      for (std::size_t r = 0; r < desc->rows(); ++r) {
        const unsigned n = desc->row_n[r];
        std::array<unsigned, 4> pos{};
        for (unsigned j = 0; j < 16 * n; ++j) {
          const std::size_t slot = offset + j;
          const unsigned p = static_cast<unsigned>((s.meta_word(*inst.meta, slot / 32) >> (2 * (slot % 32))) & 3u);
          const unsigned block = j / n;
          pos[j % n] = p;
          if (j % n == n - 1) check_ascending(std::span(pos).first(n), r, block);
          rows[r].slots.emplace_back(s.bf16(a, slot), block * 4 + p);
        }
        offset += 16 * n;
      }
      break;
    }
    default:
      throw NotACompute(std::string(mnemonic(inst.opcode)) + " is not a compute instruction");
  }
  return rows;
}

inline std::size_t b_depth(Opcode op) {
  switch (op) {
    case Opcode::kTileGemm: return 32;
    case Opcode::kTileSpmmU: return 64;
    case Opcode::kTileSpmmV: return 128;
    case Opcode::kTileSpmmR: return 64;
    default: return 0;
  }
}

}  // namespace detail

inline StepResult exec_instruction(ArchState& s, const Instruction& inst) {
  if (auto diags = validate_instruction(inst, 0); !diags.empty()) throw BadOperandClass(diags.front().message);
  const auto& info = opcode_info(inst.opcode);
  StepResult res{inst.opcode};

  switch (info.kind) {
    case OpKind::kLoad: {
      auto dst = s.bytes(inst.reg);
      if (inst.opcode == Opcode::kTileLoadM) {
        s.memory.read(inst.addr, dst);
      } else {
        for (std::size_t r = 0; r < info.rows; ++r) {
          s.memory.read(inst.addr + r * inst.stride, dst.subspan(r * kTileRowBytes, kTileRowBytes));
        }
      }
      res.bytes_read = dst.size();
      break;
    }
    case OpKind::kStore: {
      // Bounds first so a faulting store leaves memory untouched.
      for (std::size_t r = 0; r < info.rows; ++r) s.memory.check_range(inst.addr + r * inst.stride, kTileRowBytes);
      auto src = s.bytes(inst.reg);
      for (std::size_t r = 0; r < info.rows; ++r) {
        s.memory.write(inst.addr + r * inst.stride, src.subspan(r * kTileRowBytes, kTileRowBytes));
      }
      res.bytes_written = src.size();
      break;
    }
    case OpKind::kCompute: {
      std::optional<RowDescriptor> desc;
      if (inst.opcode == Opcode::kTileSpmmR) desc = RowDescriptor::decode(s.memory.read_u64(*inst.row_meta_addr));
      const auto rows = detail::decode_a(s, inst, desc);
      std::vector<float> c(rows.size() * 16);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = s.fp32(inst.reg, i);
      detail::accumulate_rows(s, rows, inst.src2, detail::b_depth(inst.opcode), c);
      for (std::size_t i = 0; i < c.size(); ++i) s.set_fp32(inst.reg, i, c[i]);
      res.useful_macs = desc ? useful_mac_count(inst, *desc) : useful_mac_count(inst);
      break;
    }
  }
  ++s.retired;
  return res;
}

/// One retired instruction, as written to JSON-lines traces.
struct RetireRecord {
  std::size_t index = 0;
  Instruction inst;
  std::uint64_t useful_macs = 0;
};

class ExecutionError : public Error {
 public:
  ExecutionError(const Error& cause, std::size_t index, std::size_t line)
      : Error(cause.code(), "instruction " + std::to_string(index) +
                                (line ? " (line " + std::to_string(line) + ")" : std::string()) + ": " +
                                cause.what()),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

inline std::vector<RetireRecord> run_program(ArchState& s, const Program& program) {
  std::vector<RetireRecord> trace;
  trace.reserve(program.size());
  for (std::size_t i = 0; i < program.size(); ++i) {
    const auto& inst = program.instructions[i];
    try {
      const auto res = exec_instruction(s, inst);
      trace.push_back({i, inst, res.useful_macs});
    } catch (const Error& e) {
      throw ExecutionError(e, i, program.line_of(i));
    }
  }
  return trace;
}

/// Memory image manifest: one `<addr> <tile-file> [values|meta]` entry per
/// line, `#` comments. Dense files contribute their row-major payload;
/// compressed files contribute either their value slots (default) or their
/// metadata words. Relative paths resolve against the manifest's directory.
struct ImageEntry {
  std::uint64_t addr = 0;
  std::string path;
  std::string part = "values";
};

inline std::vector<ImageEntry> parse_image_manifest(std::string_view text, const std::string& origin = "manifest") {
  std::vector<ImageEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string addr, path, part;
    if (!(ls >> addr)) continue;
    ImageEntry e;
    try {
      std::size_t used = 0;
      e.addr = std::stoull(addr, &used, 0);
      if (used != addr.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": bad address '" + addr + "'");
    }
    if (!(ls >> path)) throw ParseError(origin + ":" + std::to_string(line_no) + ": missing tile file path");
    if (ls >> part) {
      if (part != "values" && part != "meta") {
        throw ParseError(origin + ":" + std::to_string(line_no) + ": part must be 'values' or 'meta'");
      }
      e.part = part;
    }
    e.path = path;
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<std::uint8_t> tile_payload(const TileFile& tile, const std::string& part) {
  std::vector<std::uint8_t> bytes;
  if (const auto* d = std::get_if<DenseTile>(&tile)) {
    const auto esz = dtype_size(d->dtype);
    bytes.resize(d->values.size() * esz);
    for (std::size_t i = 0; i < d->values.size(); ++i) {
      if (esz == 2) {
        store_le<std::uint16_t>(bytes.data() + 2 * i, static_cast<std::uint16_t>(d->values[i]));
      } else {
        store_le<std::uint32_t>(bytes.data() + 4 * i, d->values[i]);
      }
    }
    return bytes;
  }
  const auto& c = std::get<CompressedTile>(tile);
  if (part == "meta") {
    bytes.resize(c.metadata.size() * 8);
    for (std::size_t i = 0; i < c.metadata.size(); ++i) store_le<std::uint64_t>(bytes.data() + 8 * i, c.metadata[i]);
  } else {
    bytes.resize(c.values.size() * 2);
    for (std::size_t i = 0; i < c.values.size(); ++i) store_le<std::uint16_t>(bytes.data() + 2 * i, c.values[i]);
  }
  return bytes;
}

inline void load_memory_image(ArchState& s, const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError(manifest_path + ": cannot open manifest");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto base = std::filesystem::path(manifest_path).parent_path();
  for (const auto& e : parse_image_manifest(ss.str(), manifest_path)) {
    std::filesystem::path p(e.path);
    if (p.is_relative()) p = base / p;
    const auto payload = tile_payload(read_tile_file(p.string()), e.part);
    s.memory.write(e.addr, payload);
  }
}

/// Reads a dense tile of `rows` x `cols` scalars back out of memory.
inline DenseTile read_tile_from_memory(const FlatMemory& mem, std::uint64_t addr, std::size_t rows, std::size_t cols,
                                       DType dtype, std::size_t stride) {
  const auto esz = dtype_size(dtype);
  DenseTile t = DenseTile::zeros(rows, cols, dtype);
  std::vector<std::uint8_t> row(cols * esz);
  for (std::size_t r = 0; r < rows; ++r) {
    mem.read(addr + r * stride, row);
    for (std::size_t c = 0; c < cols; ++c) {
      t.at(r, c) = esz == 2 ? load_le<std::uint16_t>(row.data() + 2 * c) : load_le<std::uint32_t>(row.data() + 4 * c);
    }
  }
  return t;
}

}  // namespace vegeta
