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

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "oracle.hpp"
#include "vegeta/vegeta.hpp"

namespace {

namespace fs = std::filesystem;
using namespace vegeta;

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult run(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string(VEGETA_CLI) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string read_text_file(const std::string& path) {
  const auto b = read_file_bytes(path);
  return std::string(b.begin(), b.end());
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("vegeta_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, KernelJsonCounts) {
  const CliResult r = run("kernel --dm 48 --dn 32 --dk 128 --sparsity 2:4 --variant unrolljam3 --json -");
  ASSERT_EQ(r.status, 0) << r.out;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["predicted"]["tile_loads"], 22);
  EXPECT_EQ(j["observed"]["tile_loads"], 22);
  EXPECT_EQ(j["observed"]["metadata_loads"], 12);
  EXPECT_EQ(j["register_pressure"]["tregs"], 6);
}

TEST_F(CliTest, SimulateSampleProgram) {
  const CliResult r = run("simulate --program " VEGETA_SAMPLES "/independent.vga --preset vegeta-s-16-2 --of --json -");
  ASSERT_EQ(r.status, 0) << r.out;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["issue_interval"], 16);
  EXPECT_EQ(j["compute_ops"], 8);
  EXPECT_EQ(j["stall_cycles"], 0);
  EXPECT_TRUE(j["output_forwarding"].get<bool>());
}

TEST_F(CliTest, SimulateConfigFile) {
  const CliResult r = run("simulate --program " VEGETA_SAMPLES "/independent.vga --config " VEGETA_SAMPLES
                    "/s16of.cfg --json -");
  ASSERT_EQ(r.status, 0) << r.out;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["engine"], "vegeta-s-16-2");
  EXPECT_TRUE(j["output_forwarding"].get<bool>());
  EXPECT_DOUBLE_EQ(j["clock_ghz"].get<double>(), 0.5);
}

TEST_F(CliTest, CompressDecompressRoundTrip) {
  std::mt19937_64 rng(7);
  const auto v = oracle::random_n_of_4(rng, 16, 64, 2);
  write_tile_file(path("a.vgt"), DenseTile{16, 64, DType::kBf16, std::vector<std::uint32_t>(v.begin(), v.end())});
  ASSERT_EQ(run("compress --pattern 2:4 " + path("a.vgt") + " " + path("a.vgtc")).status, 0);
  ASSERT_EQ(run("decompress " + path("a.vgtc") + " " + path("b.vgt")).status, 0);
  EXPECT_EQ(read_file_bytes(path("a.vgt")), read_file_bytes(path("b.vgt")));
  EXPECT_TRUE(std::holds_alternative<CompressedTile>(read_tile_file(path("a.vgtc"))));
}

TEST_F(CliTest, CompressRejectsDenserTile) {
  std::mt19937_64 rng(8);
  const auto v = oracle::random_n_of_4(rng, 16, 64, 3, true);
  write_tile_file(path("a.vgt"), DenseTile{16, 64, DType::kBf16, std::vector<std::uint32_t>(v.begin(), v.end())});
  const CliResult r = run("compress --pattern 2:4 " + path("a.vgt") + " " + path("a.vgtc"), true);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("error[BlockOverflow]:", 0), 0u) << r.out;
  EXPECT_FALSE(fs::exists(path("a.vgtc")));
}

TEST_F(CliTest, AsmDisasmRoundTrip) {
  ASSERT_EQ(run("asm " VEGETA_SAMPLES "/independent.vga " + path("p.json")).status, 0);
  const CliResult text = run("disasm " + path("p.json"));
  ASSERT_EQ(text.status, 0);
  const Program a = assemble(read_text_file(VEGETA_SAMPLES "/independent.vga"));
  EXPECT_EQ(assemble(text.out).instructions, a.instructions);
}

TEST_F(CliTest, ParseErrorCarriesPosition) {
  std::FILE* f = std::fopen(path("bad.vga").c_str(), "w");
  std::fputs("tile_load_t t0, [0x0], 64\ntile_gemm t1, t0\n", f);
  std::fclose(f);
  const CliResult r = run("asm " + path("bad.vga") + " -", true);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("error[ParseError]: " + path("bad.vga") + ":2:", 0), 0u) << r.out;
}

TEST_F(CliTest, EmulateKernelMatchesOracle) {
  ASSERT_EQ(run("kernel --dm 48 --dn 16 --dk 64 --sparsity 4:4 --variant regpromote --out " + path("k")).status, 0);
  const GemmSpec spec{48, 16, 64, Sparsity::kDense};
  const auto k = generate_kernel(spec, KernelVariant::kRegisterPromoted);
  std::mt19937_64 rng(3);
  const auto a = oracle::random_n_of_4(rng, 48, 64, 4);
  const auto b = oracle::random_n_of_4(rng, 64, 16, 4);
  ArchState s(1 << 20);
  const std::vector<float> c(48 * 16, 1.0f);
  DenseTile ct = DenseTile::zeros(48, 16, DType::kFp32);
  ct.values.assign(ct.values.size(), oracle::float_to_bits(1.0f));
  stage_gemm_operands(s, k.manifest, DenseTile{48, 64, DType::kBf16, {a.begin(), a.end()}},
                      DenseTile{64, 16, DType::kBf16, {b.begin(), b.end()}}, ct);
  const auto& cr = k.manifest.region("C");
  std::vector<std::uint8_t> image(k.manifest.end());
  s.memory.read(0, image);
  // The whole staged range as one 1xN BF16 tile, whose payload is the raw bytes.
  DenseTile raw = DenseTile::zeros(1, image.size() / 2);
  for (std::size_t i = 0; i < raw.cols; ++i) raw.values[i] = image[2 * i] | (image[2 * i + 1] << 8);
  write_tile_file(path("mem.vgt"), raw);
  std::FILE* f = std::fopen(path("image.txt").c_str(), "w");
  std::fprintf(f, "0x0 %s\n", path("mem.vgt").c_str());
  std::fclose(f);
  char dump[128];
  std::snprintf(dump, sizeof dump, "0x%llx:48x16:fp32", static_cast<unsigned long long>(cr.addr));
  const CliResult r = run("emulate --program " + path("k.vga") + " --manifest " + path("image.txt") + " --dump " + dump + "=" +
                              path("c.vgt"), true);
  ASSERT_EQ(r.status, 0) << r.out;
  const auto out = std::get<DenseTile>(read_tile_file(path("c.vgt")));
  const auto expect = oracle::gemm(a, b, c, 48, 16, 64);
  for (std::size_t i = 0; i < expect.size(); ++i) ASSERT_EQ(out.values[i], oracle::float_to_bits(expect[i])) << i;
}

TEST_F(CliTest, ErrorsAndUsage) {
  CliResult r = run("simulate --program /nonexistent.vga", true);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("error[IoError]:", 0), 0u) << r.out;
  r = run("simulate --program " VEGETA_SAMPLES "/independent.vga --preset vegeta-x-3-3", true);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("error[ConfigError]:", 0), 0u) << r.out;
  r = run("kernel --dm 0", true);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("error[", 0), 0u) << r.out;
  r = run("frobnicate", true);
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(r.out.rfind("error[Usage]:", 0), 0u) << r.out;
  EXPECT_EQ(run("--help").status, 0);
}

TEST_F(CliTest, RooflineCsv) {
  const CliResult r = run("roofline");
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            "arithmetic_intensity,dense_vector,sparse_vector,dense_matrix,sparse_matrix");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 58);
}

TEST_F(CliTest, ReportSubset) {
  const CliResult r = run("report --workloads BERT-L1 --engines vegeta-s-16-2+of --sparsity 2:4 --unstructured 0 --json -");
  ASSERT_EQ(r.status, 0) << r.out;
  const Json j = Json::parse(r.out);
  ASSERT_EQ(j["rows"].size(), 1u);
  EXPECT_EQ(j["rows"][0]["engine"], "vegeta-s-16-2+OF");
  EXPECT_NEAR(j["rows"][0]["speedup"].get<double>(), 2.0, 0.01);
}

TEST_F(CliTest, TransformWritesRuns) {
  std::mt19937_64 rng(11);
  DenseTile t = DenseTile::zeros(16, 64);
  std::bernoulli_distribution keep(0.1);
  for (auto& v : t.values) v = keep(rng) ? 0x3F80 : 0;
  write_tile_file(path("u.vgt"), t);
  const CliResult r = run("transform " + path("u.vgt") + " " + path("u"));
  ASSERT_EQ(r.status, 0) << r.out;
  const Json plan = Json::parse(read_text_file(path("u.plan.json")));
  std::size_t rows = 0;
  for (const auto& run_j : plan["runs"]) {
    rows += run_j["length"].get<std::size_t>() - run_j["padding"].get<std::size_t>();
    EXPECT_TRUE(fs::exists(run_j["file"].get<std::string>()));
  }
  EXPECT_EQ(rows, 16u);
}

}  // namespace
