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

// GEMM/SPMM kernel generator: C[d_m x d_n] += A[d_m x d_k] * B[d_k x d_n]
// with A the (optionally N:4-compressed) weight operand, tiled 16 x 16 x t_k
// and walked in i-j-k order.
//
// Memory layout written to the manifest:
//   A       compressed values, row-major d_m x (d_k*n/4) BF16; tile (i,k) is
//           the 16 x 32 block at row 16i, column 32k.
//   A_meta  one 128-byte metadata block per (i,k) tile, tile-major.
//   B       one contiguous B^T tile (16 x t_k BF16) per (j,k), tile-major.
//   C       row-major d_m x d_n FP32; tile (i,j) at row 16i, column 16j.

#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vegeta/common.hpp"
#include "vegeta/emulator.hpp"
#include "vegeta/isa.hpp"
#include "vegeta/nm_sparsity.hpp"

namespace vegeta {

enum class Sparsity { kDense, k2of4, k1of4, kRowWise };

inline std::string to_string(Sparsity s) {
  switch (s) {
    case Sparsity::kDense: return "4:4";
    case Sparsity::k2of4: return "2:4";
    case Sparsity::k1of4: return "1:4";
    case Sparsity::kRowWise: return "row-wise";
  }
  return "?";
}

inline Sparsity parse_sparsity(std::string_view text) {
  if (text == "4:4" || text == "dense") return Sparsity::kDense;
  if (text == "2:4") return Sparsity::k2of4;
  if (text == "1:4") return Sparsity::k1of4;
  if (text == "row-wise" || text == "rowwise") return Sparsity::kRowWise;
  throw PatternError("unknown sparsity '" + std::string(text) + "' (expected 4:4, 2:4, 1:4 or row-wise)");
}

inline unsigned nonzeros_per_block(Sparsity s) {
  switch (s) {
    case Sparsity::kDense: return 4;
    case Sparsity::k2of4: return 2;
    case Sparsity::k1of4: return 1;
    case Sparsity::kRowWise: break;
  }
  throw PatternError("row-wise sparsity has no single N");
}

enum class KernelVariant { kNaive, kRegisterPromoted, kUnrollJam3 };

inline std::string to_string(KernelVariant v) {
  switch (v) {
    case KernelVariant::kNaive: return "naive";
    case KernelVariant::kRegisterPromoted: return "regpromote";
    case KernelVariant::kUnrollJam3: return "unrolljam3";
  }
  return "?";
}

inline KernelVariant parse_variant(std::string_view text) {
  if (text == "naive") return KernelVariant::kNaive;
  if (text == "regpromote" || text == "register-promoted" || text == "registerpromoted") {
    return KernelVariant::kRegisterPromoted;
  }
  if (text == "unrolljam3" || text == "unroll-jam3") return KernelVariant::kUnrollJam3;
  throw ShapeError("unknown kernel variant '" + std::string(text) + "' (expected naive, regpromote, unrolljam3)");
}

struct GemmSpec {
  std::size_t d_m = 16;
  std::size_t d_n = 16;
  std::size_t d_k = 32;
  Sparsity sparsity = Sparsity::kDense;

  static constexpr std::size_t t_m = 16;
  static constexpr std::size_t t_n = 16;

  std::size_t t_k() const {
    switch (sparsity) {
      case Sparsity::kDense: return 32;
      case Sparsity::k2of4: return 64;
      case Sparsity::k1of4: return 128;
      case Sparsity::kRowWise: return 64;
    }
    return 32;
  }
  std::size_t m_tiles() const { return d_m / t_m; }
  std::size_t n_tiles() const { return d_n / t_n; }
  std::size_t k_tiles() const { return d_k / t_k(); }

  void check() const {
    if (d_m == 0 || d_n == 0 || d_k == 0) throw ShapeError("GEMM dimensions must be positive");
    if (d_m % t_m || d_n % t_n || d_k % t_k()) {
      throw ShapeError("dims " + std::to_string(d_m) + "x" + std::to_string(d_n) + "x" + std::to_string(d_k) +
                       " are not multiples of the " + std::to_string(t_m) + "x" + std::to_string(t_n) + "x" +
                       std::to_string(t_k()) + " tile for " + to_string(sparsity));
    }
  }
};

struct PredictedCounts {
  std::uint64_t tile_loads = 0;      // A, B and C tile loads
  std::uint64_t metadata_loads = 0;  // tile_load_m
  std::uint64_t stores = 0;
  std::uint64_t computes = 0;

  friend bool operator==(const PredictedCounts&, const PredictedCounts&) = default;
};

inline void check_variant(const GemmSpec& spec, KernelVariant variant) {
  spec.check();
  if (spec.sparsity == Sparsity::kRowWise) {
    throw PatternError("row-wise kernels depend on the weight values; use the row-wise occupancy estimate");
  }
  if (variant == KernelVariant::kUnrollJam3 && spec.m_tiles() % 3 != 0) {
    throw UnrollError("unroll-and-jam by 3 needs d_m/16 divisible by 3, got " + std::to_string(spec.m_tiles()));
  }
}

inline PredictedCounts predicted_counts(const GemmSpec& spec, KernelVariant variant) {
  check_variant(spec, variant);
  const std::uint64_t m = spec.m_tiles(), n = spec.n_tiles(), k = spec.k_tiles();
  PredictedCounts p;
  p.computes = m * n * k;
  switch (variant) {
    case KernelVariant::kNaive:
      p.tile_loads = 3 * m * n * k;
      p.stores = m * n * k;
      break;
    case KernelVariant::kRegisterPromoted:
      p.tile_loads = 2 * m * n * k + m * n;
      p.stores = m * n;
      break;
    case KernelVariant::kUnrollJam3:
      p.tile_loads = 4 * (m / 3) * n * k + m * n;
      p.stores = m * n;
      break;
  }
  p.metadata_loads = spec.sparsity == Sparsity::kDense ? 0 : m * n * k;
  return p;
}

struct MemoryRegion {
  std::string name;
  std::uint64_t addr = 0;
  std::uint64_t bytes = 0;
  std::uint64_t row_stride = 0;  // 0 for tile-major regions
  std::string layout;
};

struct KernelManifest {
  GemmSpec spec;
  KernelVariant variant = KernelVariant::kNaive;
  std::vector<MemoryRegion> regions;

  const MemoryRegion& region(std::string_view name) const {
    for (const auto& r : regions) {
      if (r.name == name) return r;
    }
    throw ConfigError("manifest has no region '" + std::string(name) + "'");
  }
  std::uint64_t end() const {
    std::uint64_t e = 0;
    for (const auto& r : regions) e = std::max(e, r.addr + r.bytes);
    return e;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "# kernel " << to_string(variant) << " dm=" << spec.d_m << " dn=" << spec.d_n << " dk=" << spec.d_k
       << " sparsity=" << to_string(spec.sparsity) << "\n";
    os << "# region addr bytes row_stride layout\n";
    for (const auto& r : regions) {
      os << r.name << " 0x" << std::hex << r.addr << std::dec << " " << r.bytes << " " << r.row_stride << " "
         << r.layout << "\n";
    }
    return os.str();
  }
};

/// Addresses of every operand tile under the layout above.
class OperandLayout {
 public:
  OperandLayout(const GemmSpec& spec, std::uint64_t base) : spec_(spec) {
    auto align = [](std::uint64_t v) { return (v + 4095) / 4096 * 4096; };
    const unsigned n = spec.sparsity == Sparsity::kDense ? 4 : nonzeros_per_block(spec.sparsity);
    a_stride_ = spec.d_k * n / 4 * 2;
    a_ = align(base);
    meta_ = align(a_ + spec.d_m * a_stride_);
    const std::uint64_t meta_bytes = spec.sparsity == Sparsity::kDense ? 0 : spec.m_tiles() * spec.k_tiles() * kMregBytes;
    b_ = align(meta_ + meta_bytes);
    b_tile_bytes_ = GemmSpec::t_n * spec.t_k() * 2;
    c_ = align(b_ + spec.n_tiles() * spec.k_tiles() * b_tile_bytes_);
    c_stride_ = spec.d_n * 4;
    manifest_.spec = spec;
    manifest_.regions = {
        {"A", a_, spec.d_m * a_stride_, a_stride_, "bf16-row-major-compressed"},
        {"A_meta", meta_, meta_bytes, 0, "mreg-tile-major"},
        {"B", b_, spec.n_tiles() * spec.k_tiles() * b_tile_bytes_, 0, "bf16-bt-tile-major"},
        {"C", c_, spec.d_m * c_stride_, c_stride_, "fp32-row-major"},
    };
  }

  std::uint64_t a_tile(std::size_t i, std::size_t k) const { return a_ + i * 16 * a_stride_ + k * 64; }
  std::uint64_t meta_tile(std::size_t i, std::size_t k) const { return meta_ + (i * spec_.k_tiles() + k) * kMregBytes; }
  std::uint64_t b_tile(std::size_t j, std::size_t k) const { return b_ + (j * spec_.k_tiles() + k) * b_tile_bytes_; }
  std::uint64_t c_tile(std::size_t i, std::size_t j) const { return c_ + i * 16 * c_stride_ + j * 64; }
  std::uint32_t a_stride() const { return static_cast<std::uint32_t>(a_stride_); }
  std::uint32_t c_stride() const { return static_cast<std::uint32_t>(c_stride_); }
  const KernelManifest& manifest() const { return manifest_; }

 private:
  GemmSpec spec_;
  std::uint64_t a_ = 0, meta_ = 0, b_ = 0, c_ = 0;
  std::uint64_t a_stride_ = 0, c_stride_ = 0, b_tile_bytes_ = 0;
  KernelManifest manifest_;
};

struct GeneratedKernel {
  Program program;
  KernelManifest manifest;
};

inline constexpr std::uint64_t kDefaultKernelBase = 0x10000;

inline GeneratedKernel generate_kernel(const GemmSpec& spec, KernelVariant variant,
                                       std::uint64_t base = kDefaultKernelBase) {
  check_variant(spec, variant);
  const OperandLayout layout(spec, base);
  GeneratedKernel out;
  out.manifest = layout.manifest();
  out.manifest.variant = variant;
  Program& p = out.program;

  const bool sparse = spec.sparsity != Sparsity::kDense;
  Opcode b_load = Opcode::kTileLoadT, compute = Opcode::kTileGemm;
  RegisterId b_reg = RegisterId::t(0);
  std::array<RegisterId, 3> a_regs = {RegisterId::t(2), RegisterId::t(3), RegisterId::t(4)};
  if (spec.sparsity == Sparsity::k2of4) {
    b_load = Opcode::kTileLoadU;
    compute = Opcode::kTileSpmmU;
    b_reg = RegisterId::u(0);
  } else if (spec.sparsity == Sparsity::k1of4) {
    // v0 covers t0-t3, so the three A tiles share t4.
    b_load = Opcode::kTileLoadV;
    compute = Opcode::kTileSpmmV;
    b_reg = RegisterId::v(0);
    a_regs = {RegisterId::t(4), RegisterId::t(4), RegisterId::t(4)};
  }
  const std::array<RegisterId, 3> m_regs = {RegisterId::m(2), RegisterId::m(3), RegisterId::m(4)};
  const std::array<RegisterId, 3> c_regs = {RegisterId::t(5), RegisterId::t(6), RegisterId::t(7)};

  auto load_c = [&](unsigned u, std::size_t i, std::size_t j) {
    p.push(Instruction::load(Opcode::kTileLoadT, c_regs[u], layout.c_tile(i, j), layout.c_stride()));
  };
  auto store_c = [&](unsigned u, std::size_t i, std::size_t j) {
    p.push(Instruction::store(c_regs[u], layout.c_tile(i, j), layout.c_stride()));
  };
  auto load_b = [&](std::size_t j, std::size_t k) { p.push(Instruction::load(b_load, b_reg, layout.b_tile(j, k))); };
  auto load_a_and_compute = [&](unsigned u, std::size_t i, std::size_t k) {
    p.push(Instruction::load(Opcode::kTileLoadT, a_regs[u], layout.a_tile(i, k), layout.a_stride()));
    if (sparse) {
      p.push(Instruction::load(Opcode::kTileLoadM, m_regs[u], layout.meta_tile(i, k)));
      p.push(Instruction::compute(compute, c_regs[u], a_regs[u], b_reg, m_regs[u]));
    } else {
      p.push(Instruction::compute(compute, c_regs[u], a_regs[u], b_reg));
    }
  };

  const std::size_t mt = spec.m_tiles(), nt = spec.n_tiles(), kt = spec.k_tiles();
  switch (variant) {
    case KernelVariant::kNaive:
      for (std::size_t i = 0; i < mt; ++i)
        for (std::size_t j = 0; j < nt; ++j)
          for (std::size_t k = 0; k < kt; ++k) {
            load_c(0, i, j);
            load_b(j, k);
            load_a_and_compute(0, i, k);
            store_c(0, i, j);
          }
      break;
    case KernelVariant::kRegisterPromoted:
      for (std::size_t i = 0; i < mt; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
          load_c(0, i, j);
          for (std::size_t k = 0; k < kt; ++k) {
            load_b(j, k);
            load_a_and_compute(0, i, k);
          }
          store_c(0, i, j);
        }
      break;
    case KernelVariant::kUnrollJam3:
      for (std::size_t i = 0; i < mt; i += 3)
        for (std::size_t j = 0; j < nt; ++j) {
          for (unsigned u = 0; u < 3; ++u) load_c(u, i + u, j);
          for (std::size_t k = 0; k < kt; ++k) {
            load_b(j, k);
            for (unsigned u = 0; u < 3; ++u) load_a_and_compute(u, i + u, k);
          }
          for (unsigned u = 0; u < 3; ++u) store_c(u, i + u, j);
        }
      break;
  }
  return out;
}

/// Opcode tally in the same buckets as predicted_counts.
inline PredictedCounts count_opcodes(const Program& program) {
  PredictedCounts c;
  for (const auto& inst : program.instructions) {
    if (is_tile_load(inst.opcode)) ++c.tile_loads;
    if (inst.opcode == Opcode::kTileLoadM) ++c.metadata_loads;
    if (is_store(inst.opcode)) ++c.stores;
    if (is_compute(inst.opcode)) ++c.computes;
  }
  return c;
}

struct RegisterPressure {
  std::size_t max_live_tregs = 0;
  std::size_t max_live_mregs = 0;
};

/// Peak number of registers holding a value that is still to be read.
inline RegisterPressure register_pressure(const Program& program) {
  const std::size_t n = program.size();
  // busy[i]: registers live across instruction i or touched by it.
  std::vector<std::uint16_t> busy(n, 0);
  auto bits_of = [](RegisterId r) -> std::uint16_t {
    if (r.cls == RegClass::kM) return static_cast<std::uint16_t>(1u << (8 + r.index));
    std::uint16_t b = 0;
    for (unsigned t = r.first_treg(); t < r.first_treg() + r.treg_count(); ++t) b |= static_cast<std::uint16_t>(1u << t);
    return b;
  };
  std::uint16_t live_out = 0;
  for (std::size_t i = n; i-- > 0;) {
    const auto& inst = program.instructions[i];
    std::uint16_t uses = 0, defs = 0;
    switch (opcode_info(inst.opcode).kind) {
      case OpKind::kLoad: defs = bits_of(inst.reg); break;
      case OpKind::kStore: uses = bits_of(inst.reg); break;
      case OpKind::kCompute:
        uses = bits_of(inst.reg) | bits_of(inst.src1) | bits_of(inst.src2);
        if (inst.meta) uses |= bits_of(*inst.meta);
        defs = bits_of(inst.reg);
        break;
    }
    busy[i] = static_cast<std::uint16_t>(live_out | uses | defs);
    live_out = static_cast<std::uint16_t>((live_out & ~defs) | uses);
  }
  RegisterPressure rp;
  for (std::size_t i = 0; i < n; ++i) {
    rp.max_live_tregs = std::max<std::size_t>(rp.max_live_tregs, std::popcount(static_cast<unsigned>(busy[i] & 0xFFu)));
    rp.max_live_mregs = std::max<std::size_t>(rp.max_live_mregs, std::popcount(static_cast<unsigned>(busy[i] >> 8)));
  }
  return rp;
}

/// Writes operands into memory following `manifest`. `a` is the dense
/// d_m x d_k weight (BF16 patterns, must satisfy spec.sparsity),
/// `b` the dense d_k x d_n input (BF16) and `c` the d_m x d_n FP32 initial
/// accumulator.
inline void stage_gemm_operands(ArchState& s, const KernelManifest& manifest, const DenseTile& a, const DenseTile& b,
                                const DenseTile& c) {
  const GemmSpec& spec = manifest.spec;
  if (a.rows != spec.d_m || a.cols != spec.d_k || b.rows != spec.d_k || b.cols != spec.d_n || c.rows != spec.d_m ||
      c.cols != spec.d_n) {
    throw ShapeError("operand shapes do not match the kernel");
  }
  const OperandLayout layout(spec, manifest.region("A").addr);
  const NMPattern pattern{spec.sparsity == Sparsity::kDense ? 4u : nonzeros_per_block(spec.sparsity), 4};
  const std::size_t tk = spec.t_k();
  std::vector<std::uint8_t> row(64);
  for (std::size_t i = 0; i < spec.m_tiles(); ++i) {
    for (std::size_t k = 0; k < spec.k_tiles(); ++k) {
      DenseTile tile = DenseTile::zeros(16, tk);
      for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t cc = 0; cc < tk; ++cc) tile.at(r, cc) = a.at(i * 16 + r, k * tk + cc);
      const CompressedTile ct = compress_nm(tile, pattern);
      for (std::size_t r = 0; r < 16; ++r) {
        for (std::size_t sl = 0; sl < 32; ++sl) store_le<std::uint16_t>(row.data() + 2 * sl, ct.values[r * 32 + sl]);
        s.memory.write(layout.a_tile(i, k) + r * layout.a_stride(), row);
      }
      if (spec.sparsity != Sparsity::kDense) {
        std::array<std::uint8_t, kMregBytes> meta{};
        for (std::size_t r = 0; r < 16; ++r) store_le<std::uint64_t>(meta.data() + 8 * r, ct.metadata[r]);
        s.memory.write(layout.meta_tile(i, k), meta);
      }
    }
  }
  std::vector<std::uint8_t> bt(GemmSpec::t_n * tk * 2);
  for (std::size_t j = 0; j < spec.n_tiles(); ++j) {
    for (std::size_t k = 0; k < spec.k_tiles(); ++k) {
      for (std::size_t n = 0; n < GemmSpec::t_n; ++n)
        for (std::size_t kk = 0; kk < tk; ++kk)
          store_le<std::uint16_t>(bt.data() + 2 * (n * tk + kk), static_cast<std::uint16_t>(b.at(k * tk + kk, j * 16 + n)));
      s.memory.write(layout.b_tile(j, k), bt);
    }
  }
  std::vector<std::uint8_t> crow(spec.d_n * 4);
  for (std::size_t r = 0; r < spec.d_m; ++r) {
    for (std::size_t cc = 0; cc < spec.d_n; ++cc) store_le<std::uint32_t>(crow.data() + 4 * cc, c.at(r, cc));
    s.memory.write(layout.c_tile(0, 0) + r * layout.c_stride(), crow);
  }
}

inline DenseTile read_gemm_result(const ArchState& s, const KernelManifest& manifest) {
  const auto& c = manifest.region("C");
  return read_tile_from_memory(s.memory, c.addr, manifest.spec.d_m, manifest.spec.d_n, DType::kFp32, c.row_stride);
}

}  // namespace vegeta
