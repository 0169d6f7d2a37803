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


#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "cases.hpp"
#include "oracle.hpp"
#include "vegeta/assembler.hpp"
#include "vegeta/emulator.hpp"
#include "vegeta/json_io.hpp"
#include "vegeta/kernel_codegen.hpp"

using namespace vegeta;

namespace {

constexpr std::size_t kSmallMem = 1 << 20;

class OracleEquivalence : public ::testing::TestWithParam<Opcode> {};

TEST_P(OracleEquivalence, IntegerOperandsBitExact) {
  std::mt19937_64 rng(1000 + static_cast<int>(GetParam()));
  for (int i = 0; i < 200; ++i) {
    ArchState s(kSmallMem);
    const auto cc = cases::make_case(GetParam(), rng, s);
    exec_instruction(s, cc.inst);
    ASSERT_TRUE(cases::bit_identical(cases::result(s, cc), cc.expected())) << "case " << i;
  }
}

TEST_P(OracleEquivalence, GeneralOperandsMatchAscendingK) {
  std::mt19937_64 rng(2000 + static_cast<int>(GetParam()));
  for (int i = 0; i < 100; ++i) {
    ArchState s(kSmallMem);
    const auto cc = cases::make_case(GetParam(), rng, s, true);
    exec_instruction(s, cc.inst);
    const auto got = cases::result(s, cc);
    const auto want = cc.expected();
    for (std::size_t e = 0; e < got.size(); ++e) ASSERT_EQ(got[e], want[e]) << "case " << i << " elem " << e;
  }
}

INSTANTIATE_TEST_SUITE_P(AllComputeOps, OracleEquivalence,
                         ::testing::Values(Opcode::kTileGemm, Opcode::kTileSpmmU, Opcode::kTileSpmmV,
                                           Opcode::kTileSpmmR),
                         [](const auto& info) { return std::string(mnemonic(info.param)); });

TEST(Emulator, GemmIdentityCopiesB) {
  ArchState s(kSmallMem);
  std::mt19937_64 rng(3);
  for (std::size_t r = 0; r < 16; ++r) cases::put16(s, RegisterId::t(2), r * 32 + r, oracle::bf16_int(1));
  std::vector<std::uint16_t> b(32 * 16);
  for (std::size_t k = 0; k < 32; ++k)
    for (std::size_t n = 0; n < 16; ++n) {
      b[k * 16 + n] = cases::int_value(rng);
      cases::put16(s, RegisterId::t(0), n * 32 + k, b[k * 16 + n]);
    }
  exec_instruction(s, Instruction::compute(Opcode::kTileGemm, RegisterId::t(5), RegisterId::t(2), RegisterId::t(0)));
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t n = 0; n < 16; ++n)
      EXPECT_EQ(cases::get_f32(s, RegisterId::t(5), r * 16 + n), oracle::bf16_value(b[r * 16 + n]));
}

TEST(Emulator, LoadUIsVisibleThroughTregs) {
  ArchState s(kSmallMem);
  std::vector<std::uint8_t> img(2048);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint8_t>(i * 7 + 1);
  s.memory.write(0x4000, img);
  exec_instruction(s, Instruction::load(Opcode::kTileLoadU, RegisterId::u(1), 0x4000));
  EXPECT_TRUE(std::equal(img.begin(), img.begin() + 1024, s.bytes(RegisterId::t(2)).begin()));
  EXPECT_TRUE(std::equal(img.begin() + 1024, img.end(), s.bytes(RegisterId::t(3)).begin()));
  s.bytes(RegisterId::t(3))[5] = 0xAB;
  EXPECT_EQ(s.bytes(RegisterId::u(1))[1024 + 5], 0xAB);
  EXPECT_EQ(s.bytes(RegisterId::v(0))[2048 + 1024 + 5], 0xAB);
}

TEST(Emulator, ComputeTwiceDoublesDelta) {
  std::mt19937_64 rng(5);
  for (Opcode op : {Opcode::kTileGemm, Opcode::kTileSpmmU, Opcode::kTileSpmmV, Opcode::kTileSpmmR}) {
    ArchState s(kSmallMem);
    const auto cc = cases::make_case(op, rng, s);
    exec_instruction(s, cc.inst);
    exec_instruction(s, cc.inst);
    const auto once = cc.expected();
    const auto got = cases::result(s, cc);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i] - cc.c[i], 2 * (once[i] - cc.c[i]));
  }
}

TEST(Emulator, SpmmRAllDenseRowsEqualsEightOracleRows) {
  std::mt19937_64 rng(8);
  ArchState s(kSmallMem);
  const auto cc = cases::make_case(Opcode::kTileSpmmR, rng, s, false, std::vector<unsigned>(8, 4));
  ASSERT_EQ(cc.rows, 8u);
  // Rows past R keep whatever the ureg held.
  for (std::size_t i = 8 * 16; i < 32 * 16; ++i) cases::put_f32(s, RegisterId::u(2), i, 99.0f);
  exec_instruction(s, cc.inst);
  EXPECT_TRUE(cases::bit_identical(cases::result(s, cc), cc.expected()));
  for (std::size_t i = 8 * 16; i < 32 * 16; ++i) ASSERT_EQ(cases::get_f32(s, RegisterId::u(2), i), 99.0f);
}

TEST(Emulator, SpmmRMixedRowsAndFullOneOfFour) {
  std::mt19937_64 rng(9);
  for (const auto& rows : {std::vector<unsigned>(32, 1), std::vector<unsigned>{4, 4, 4, 4, 2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1}}) {
    ArchState s(kSmallMem);
    const auto cc = cases::make_case(Opcode::kTileSpmmR, rng, s, false, rows);
    const auto res = exec_instruction(s, cc.inst);
    EXPECT_TRUE(cases::bit_identical(cases::result(s, cc), cc.expected()));
    EXPECT_EQ(res.useful_macs, 8192u);
  }
}

TEST(RowDescriptor, RejectsBadWords) {
  EXPECT_THROW(RowDescriptor::decode(0), RowDescriptorInvalid);
  // 4 rows of 4:4: too few rows.
  EXPECT_THROW(RowDescriptor::decode(0xFF), RowDescriptorInvalid);
  // 9 rows of 4:4: 576 slots.
  EXPECT_THROW(RowDescriptor::decode(cases::descriptor_word(std::vector<unsigned>(9, 4))), RowDescriptorInvalid);
  // Active row after a hole.
  std::uint64_t holed = cases::descriptor_word(std::vector<unsigned>(12, 1));
  holed &= ~(std::uint64_t{3} << 6);
  EXPECT_THROW(RowDescriptor::decode(holed), RowDescriptorInvalid);
  const auto d = RowDescriptor::decode(cases::descriptor_word({4, 2, 1, 1, 1, 1, 1, 1, 2}));
  EXPECT_EQ(d.rows(), 9u);
  EXPECT_EQ(d.slots(), 64u + 32 + 6 * 16 + 32);
  EXPECT_EQ(d.encode(), cases::descriptor_word({4, 2, 1, 1, 1, 1, 1, 1, 2}));
}

TEST(Emulator, SpmmRWithBadDescriptorInMemory) {
  std::mt19937_64 rng(10);
  ArchState s(kSmallMem);
  auto cc = cases::make_case(Opcode::kTileSpmmR, rng, s);
  std::uint8_t zero[8] = {};
  s.memory.write(cases::kDescriptorAddr, zero);
  EXPECT_THROW(exec_instruction(s, cc.inst), RowDescriptorInvalid);
}

TEST(Emulator, DescendingMetadataIsInvalid) {
  std::mt19937_64 rng(11);
  ArchState s(kSmallMem);
  auto cc = cases::make_case(Opcode::kTileSpmmU, rng, s);
  s.set_meta_word(RegisterId::m(2), 3, 0b0110);  // slot 0 -> 2, slot 1 -> 1
  try {
    exec_instruction(s, cc.inst);
    FAIL();
  } catch (const MetadataInvalid& e) {
    EXPECT_NE(std::string(e.what()).find("row 3, block 0"), std::string::npos) << e.what();
  }
  s.set_meta_word(RegisterId::m(2), 3, 0b0101);  // equal positions
  EXPECT_THROW(exec_instruction(s, cc.inst), MetadataInvalid);
}

TEST(Emulator, OutOfBounds) {
  ArchState s(4096);
  EXPECT_THROW(exec_instruction(s, Instruction::load(Opcode::kTileLoadT, RegisterId::t(0), 0, 512)), OutOfBounds);
  EXPECT_NO_THROW(exec_instruction(s, Instruction::load(Opcode::kTileLoadT, RegisterId::t(0), 0, 64)));
  EXPECT_THROW(exec_instruction(s, Instruction::load(Opcode::kTileLoadM, RegisterId::m(0), 4000)), OutOfBounds);
  s.bytes(RegisterId::t(1))[0] = 1;
  const FlatMemory before = s.memory;
  EXPECT_THROW(exec_instruction(s, Instruction::store(RegisterId::t(1), 3200, 64)), OutOfBounds);
  EXPECT_TRUE(s.memory == before);
  EXPECT_THROW(exec_instruction(s, Instruction::load(Opcode::kTileLoadT, RegisterId::t(0), ~std::uint64_t{0} - 8)),
               OutOfBounds);
}

TEST(Emulator, UsefulMacCount) {
  for (Opcode op : {Opcode::kTileGemm, Opcode::kTileSpmmU, Opcode::kTileSpmmV}) {
    EXPECT_EQ(useful_mac_count(Instruction::compute(op, RegisterId::t(0), RegisterId::t(1), RegisterId::t(2))), 8192u);
  }
  const auto r = Instruction::compute(Opcode::kTileSpmmR, RegisterId::u(1), RegisterId::t(0), RegisterId::u(0),
                                      RegisterId::m(0), 0);
  EXPECT_EQ(useful_mac_count(r, RowDescriptor::decode(cases::descriptor_word(std::vector<unsigned>(32, 1)))), 8192u);
  EXPECT_EQ(useful_mac_count(r, RowDescriptor::decode(cases::descriptor_word(std::vector<unsigned>(8, 2)))),
            8u * 32 * 16);
  EXPECT_THROW(useful_mac_count(Instruction::load(Opcode::kTileLoadT, RegisterId::t(0), 0)), NotACompute);
  EXPECT_THROW(useful_mac_count(Instruction::store(RegisterId::t(0), 0)), NotACompute);
}

TEST(Emulator, EmptyProgramLeavesStateAlone) {
  ArchState s(kSmallMem);
  s.bytes(RegisterId::t(3))[7] = 9;
  const auto tiles = s.tiles;
  const auto mregs = s.mregs;
  const FlatMemory mem = s.memory;
  EXPECT_TRUE(run_program(s, Program{}).empty());
  EXPECT_EQ(s.tiles, tiles);
  EXPECT_EQ(s.mregs, mregs);
  EXPECT_TRUE(s.memory == mem);
  EXPECT_EQ(s.retired, 0u);
}

TEST(Emulator, LoadStoreRoundTrip) {
  ArchState s(kSmallMem);
  std::mt19937_64 rng(12);
  std::vector<std::uint8_t> rows(16 * 256);
  for (auto& b : rows) b = static_cast<std::uint8_t>(rng());
  s.memory.write(0x8000, rows);
  const auto trace = run_program(s, assemble("tile_load_t t1, [0x8000], 256\n"
                                             "tile_store_t [0x8000], 256, t1\n"
                                             "tile_store_t [0x20000], 64, t1\n"));
  ASSERT_EQ(trace.size(), 3u);
  std::vector<std::uint8_t> back(rows.size()), packed(1024);
  s.memory.read(0x8000, back);
  EXPECT_EQ(back, rows);
  s.memory.read(0x20000, packed);
  for (std::size_t r = 0; r < 16; ++r)
    ASSERT_TRUE(std::equal(packed.begin() + r * 64, packed.begin() + r * 64 + 64, rows.begin() + r * 256));
  EXPECT_EQ(s.retired, 3u);
}

TEST(Emulator, SpmmKernelMatchesOracle) {
  std::mt19937_64 rng(13);
  const GemmSpec spec{32, 32, 128, Sparsity::k2of4};
  const auto kernel = generate_kernel(spec, KernelVariant::kRegisterPromoted);
  DenseTile a = DenseTile::zeros(32, 128), b = DenseTile::zeros(128, 32), c = DenseTile::zeros(32, 32, DType::kFp32);
  const auto a_bits = oracle::random_n_of_4(rng, 32, 128, 2);
  std::vector<std::uint16_t> b_bits(128 * 32);
  for (auto& v : b_bits) v = cases::int_value(rng);
  std::vector<float> c0(32 * 32);
  for (auto& v : c0) v = static_cast<float>(std::uniform_int_distribution<int>(-50, 50)(rng));
  std::copy(a_bits.begin(), a_bits.end(), a.values.begin());
  std::copy(b_bits.begin(), b_bits.end(), b.values.begin());
  for (std::size_t i = 0; i < c0.size(); ++i) c.values[i] = oracle::float_to_bits(c0[i]);

  ArchState s;
  stage_gemm_operands(s, kernel.manifest, a, b, c);
  const auto trace = run_program(s, kernel.program);
  EXPECT_EQ(trace.size(), kernel.program.size());
  const DenseTile out = read_gemm_result(s, kernel.manifest);
  const auto want = oracle::gemm(a_bits, b_bits, c0, 32, 32, 128);
  for (std::size_t i = 0; i < want.size(); ++i) ASSERT_EQ(out.values[i], oracle::float_to_bits(want[i])) << i;
}

TEST(Emulator, ErrorsCarryInstructionIndexAndLine) {
  ArchState s(4096);
  const auto p = assemble("tile_load_t t0, [0x0]\n\ntile_load_t t1, [0x10000]\n");
  try {
    run_program(s, p);
    FAIL();
  } catch (const ExecutionError& e) {
    EXPECT_EQ(e.index(), 1u);
    EXPECT_EQ(e.code(), "OutOfBounds");
    EXPECT_NE(std::string(e.what()).find("(line 3)"), std::string::npos) << e.what();
  }
}

TEST(Emulator, InvalidInstructionRejected) {
  ArchState s(kSmallMem);
  EXPECT_THROW(exec_instruction(s, Instruction::compute(Opcode::kTileSpmmR, RegisterId::u(1), RegisterId::t(0),
                                                        RegisterId::u(0), RegisterId::m(0))),
               BadOperandClass);
}

TEST(Emulator, TraceRecordJson) {
  ArchState s(kSmallMem);
  std::mt19937_64 rng(14);
  const auto cc = cases::make_case(Opcode::kTileSpmmU, rng, s);
  Program p;
  p.push(Instruction::load(Opcode::kTileLoadM, RegisterId::m(3), 0x2000));
  p.push(cc.inst);
  const auto trace = run_program(s, p);
  const auto j0 = to_json(trace[0]);
  EXPECT_EQ(j0["index"], 0);
  EXPECT_EQ(j0["opcode"], "tile_load_m");
  EXPECT_EQ(j0["addr"], 0x2000);
  EXPECT_EQ(j0["operands"]["dst"], "m3");
  const auto j1 = to_json(trace[1]);
  EXPECT_EQ(j1["opcode"], "tile_spmm_u");
  EXPECT_EQ(j1["operands"]["src2"], "u0");
  EXPECT_EQ(j1["useful_macs"], 8192);
}

class EnvGuard {
 public:
  explicit EnvGuard(const char* value) {
    if (value) {
      setenv("VEGETA_MEM_MB", value, 1);
    } else {
      unsetenv("VEGETA_MEM_MB");
    }
  }
  ~EnvGuard() { unsetenv("VEGETA_MEM_MB"); }
};

TEST(Emulator, MemoryCapFromEnvironment) {
  {
    EnvGuard g(nullptr);
    EXPECT_EQ(memory_bytes_from_env(), std::size_t{256} << 20);
  }
  {
    EnvGuard g("2");
    EXPECT_EQ(memory_bytes_from_env(), std::size_t{2} << 20);
  }
  for (const char* bad : {"0", "abc", "12x", ""}) {
    EnvGuard g(bad);
    EXPECT_THROW(memory_bytes_from_env(), ConfigError) << bad;
  }
}

TEST(MemoryImage, LoadsDenseAndCompressedTiles) {
  const auto dir = std::filesystem::temp_directory_path() / "vegeta_image_test";
  std::filesystem::create_directories(dir);
  DenseTile dense = DenseTile::zeros(2, 4);
  dense.values = {0x3F80, 0, 0, 0xBF80, 0x4000, 0x4040, 0, 0};
  write_tile_file((dir / "d.vgta").string(), dense);
  const CompressedTile ct = compress_nm(dense, kPattern2of4);
  write_tile_file((dir / "c.vgta").string(), ct);
  {
    std::ofstream m(dir / "image.txt");
    m << "# test image\n0x100 d.vgta\n0x200 c.vgta values\n0x300 c.vgta meta  # indices\n";
  }
  ArchState s(kSmallMem);
  load_memory_image(s, (dir / "image.txt").string());
  std::uint8_t buf[16];
  s.memory.read(0x100, buf);
  EXPECT_EQ(buf[0], 0x80);
  EXPECT_EQ(buf[1], 0x3F);
  EXPECT_EQ(buf[6], 0x80);
  EXPECT_EQ(buf[7], 0xBF);
  s.memory.read(0x200, std::span(buf, 8));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(buf[2 * i] | (buf[2 * i + 1] << 8), ct.values[i]);
  EXPECT_EQ(s.memory.read_u64(0x300), ct.metadata[0]);
  EXPECT_EQ(s.memory.read_u64(0x308), ct.metadata[1]);

  EXPECT_THROW(parse_image_manifest("zz d.vgta\n"), ParseError);
  EXPECT_THROW(parse_image_manifest("0x10\n"), ParseError);
  EXPECT_THROW(parse_image_manifest("0x10 a.vgta both\n"), ParseError);
  EXPECT_THROW(load_memory_image(s, (dir / "missing.txt").string()), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
