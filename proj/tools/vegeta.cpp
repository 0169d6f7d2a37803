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


// vegeta: command-line front end for the codec, ISA tools, emulator,
// engine simulator, kernel generator and analysis reports.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vegeta/vegeta.hpp"

namespace {

using namespace vegeta;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError(path + ": cannot write");
}

/// Re-throws an error with the file name in front of its position.
template <typename F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), path + ":" + e.what());
  }
}

Program load_program(const std::string& path) {
  const std::string text = read_text(path);
  Program p;
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    p = with_path(path, [&] {
      try {
        return program_from_json(Json::parse(text));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what());
      }
    });
  } else {
    p = with_path(path, [&] { return assemble(text); });
  }
  if (const auto diags = validate_program(p); !diags.empty()) {
    const auto& d = diags.front();
    throw BadOperandClass(path + ":" + std::to_string(p.line_of(d.index)) + ": " + d.message);
  }
  return p;
}

NMPattern parse_pattern(const std::string& text) { return NMPattern::parse(text); }

DenseTile read_dense(const std::string& path) {
  const TileFile f = read_tile_file(path);
  if (const auto* d = std::get_if<DenseTile>(&f)) return *d;
  throw FormatError(path + ": expected a dense tile file");
}

CompressedTile read_compressed(const std::string& path) {
  const TileFile f = read_tile_file(path);
  if (const auto* c = std::get_if<CompressedTile>(&f)) return *c;
  throw FormatError(path + ": expected a compressed tile file");
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used, 0);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("bad " + what + " '" + text + "'");
}

/// ADDR:ROWSxCOLS:DTYPE[:STRIDE]=PATH
struct DumpRequest {
  std::uint64_t addr = 0;
  std::size_t rows = 0, cols = 0;
  DType dtype = DType::kBf16;
  std::size_t stride = 0;
  std::string path;
};

DumpRequest parse_dump(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ParseError("dump '" + spec + "' needs =PATH");
  DumpRequest d;
  d.path = spec.substr(eq + 1);
  std::vector<std::string> parts;
  std::stringstream ss(spec.substr(0, eq));
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4) throw ParseError("dump '" + spec + "' must be ADDR:ROWSxCOLS:DTYPE[:STRIDE]=PATH");
  d.addr = parse_u64(parts[0], "dump address");
  const auto x = parts[1].find('x');
  if (x == std::string::npos) throw ParseError("dump shape '" + parts[1] + "' must be ROWSxCOLS");
  d.rows = parse_u64(parts[1].substr(0, x), "dump rows");
  d.cols = parse_u64(parts[1].substr(x + 1), "dump cols");
  if (parts[2] == "bf16") {
    d.dtype = DType::kBf16;
  } else if (parts[2] == "fp32") {
    d.dtype = DType::kFp32;
  } else {
    throw DtypeError("dump dtype must be bf16 or fp32, got '" + parts[2] + "'");
  }
  d.stride = parts.size() == 4 ? parse_u64(parts[3], "dump stride") : d.cols * dtype_size(d.dtype);
  if (d.rows == 0 || d.cols == 0) throw ShapeError("dump shape must be non-empty");
  return d;
}

void print_counts(std::ostream& os, const std::string& label, const PredictedCounts& c) {
  os << std::left << std::setw(12) << label << " tile_loads=" << c.tile_loads << " metadata_loads=" << c.metadata_loads
     << " stores=" << c.stores << " computes=" << c.computes << "\n";
}

// ------------------------------------------------------------------ commands

struct CompressArgs {
  std::string pattern = "2:4", in, out;
};
void cmd_compress(const CompressArgs& a) {
  const DenseTile t = read_dense(a.in);
  const CompressedTile c = with_path(a.in, [&] { return compress_nm(t, parse_pattern(a.pattern)); });
  write_tile_file(a.out, c);
  std::cout << "compressed " << t.rows << "x" << t.cols << " to " << c.phys_rows << "x" << c.phys_cols << " "
            << c.pattern.to_string() << "\n";
}

struct DecompressArgs {
  std::string in, out;
};
void cmd_decompress(const DecompressArgs& a) {
  const CompressedTile c = read_compressed(a.in);
  const DenseTile t = with_path(a.in, [&] { return decompress_nm(c); });
  write_tile_file(a.out, t);
  std::cout << "decompressed " << c.pattern.to_string() << " to " << t.rows << "x" << t.cols << "\n";
}

struct TransformArgs {
  std::string in, prefix;
  std::size_t width = 64;
};
void cmd_transform(const TransformArgs& a) {
  const DenseTile t = read_dense(a.in);
  const RowWiseTile rw = with_path(a.in, [&] { return transform_unstructured_to_rowwise(t, a.width); });
  Json plan;
  plan["rows"] = rw.rows;
  plan["cols"] = rw.cols;
  plan["permutation"] = rw.plan.permutation;
  Json runs = Json::array();
  for (std::size_t i = 0; i < rw.runs.size(); ++i) {
    const auto& run = rw.plan.group_runs[i];
    const std::string file = a.prefix + ".run" + std::to_string(i) + ".vgta";
    write_tile_file(file, rw.runs[i]);
    runs.push_back(Json{{"pattern", run.pattern.to_string()},
                        {"start", run.start},
                        {"length", run.length},
                        {"padding", run.padding},
                        {"file", file}});
    std::cout << run.pattern.to_string() << " rows " << run.start << ".." << run.start + run.length << " (padding "
              << run.padding << ") -> " << file << "\n";
  }
  plan["runs"] = runs;
  const auto occ = rowwise_occupancy(rw.plan, preset("vegeta-s-16-2"));
  plan["cols_used"] = occ.cols_used;
  plan["h_a"] = occ.h_a;
  write_text(a.prefix + ".plan.json", plan.dump(2) + "\n");
  std::cout << "h_a=" << occ.h_a << " cols_used=" << occ.cols_used << "\n";
}

struct AsmArgs {
  std::string in, out;
};
void cmd_asm(const AsmArgs& a) {
  const Program p = load_program(a.in);
  write_text(a.out, to_json(p).dump(2) + "\n");
  if (a.out != "-") std::cout << "assembled " << p.size() << " instructions\n";
}

struct DisasmArgs {
  std::string in, out = "-";
};
void cmd_disasm(const DisasmArgs& a) { write_text(a.out, disassemble(load_program(a.in))); }

struct EmulateArgs {
  std::string program, manifest, trace, json;
  std::vector<std::string> dumps;
};
void cmd_emulate(const EmulateArgs& a) {
  std::vector<DumpRequest> dumps;
  for (const auto& d : a.dumps) dumps.push_back(parse_dump(d));
  const Program p = load_program(a.program);
  ArchState s(memory_bytes_from_env());
  if (!a.manifest.empty()) load_memory_image(s, a.manifest);
  const auto trace = run_program(s, p);
  if (!a.trace.empty()) {
    std::string lines;
    for (const auto& r : trace) lines += to_json(r).dump() + "\n";
    write_text(a.trace, lines);
  }
  for (const auto& d : dumps) write_tile_file(d.path, read_tile_from_memory(s.memory, d.addr, d.rows, d.cols, d.dtype, d.stride));
  const TraceStats st = trace_stats(trace);
  if (!a.json.empty()) write_text(a.json, to_json(st).dump(2) + "\n");
  if (a.json != "-") {
    std::cout << "retired " << trace.size() << " instructions, useful_macs=" << st.useful_macs << "\n";
    print_counts(std::cout, "counts", st.counts);
  }
}

struct SimulateArgs {
  std::string program, config, preset_name, manifest, trace, json;
  bool of = false;
  unsigned load_latency = 0;
};
void cmd_simulate(const SimulateArgs& a) {
  EngineSetup setup;
  if (!a.config.empty() && !a.preset_name.empty()) throw ConfigError("give --config or --preset, not both");
  if (!a.config.empty()) {
    setup = load_engine_config(a.config);
  } else {
    setup.config = preset(a.preset_name.empty() ? "vegeta-s-16-2" : a.preset_name);
  }
  if (a.of) setup.options.output_forwarding = true;
  if (a.load_latency) setup.options.load_latency = a.load_latency;
  const Program p = load_program(a.program);

  std::vector<std::uint64_t> macs;
  if (!a.manifest.empty()) {
    ArchState s(memory_bytes_from_env());
    load_memory_image(s, a.manifest);
    for (const auto& r : run_program(s, p)) macs.push_back(r.useful_macs);
  }
  const auto res = simulate_kernel(p, setup.config, setup.options, macs.empty() ? nullptr : &macs);
  if (!a.trace.empty()) {
    std::string lines;
    for (const auto& r : res.trace.records) lines += to_json(r).dump() + "\n";
    lines += to_json(res.summary).dump() + "\n";
    write_text(a.trace, lines);
  }
  if (!a.json.empty()) write_text(a.json, to_json(res.summary).dump(2) + "\n");
  if (a.json == "-") return;
  const auto& s = res.summary;
  std::cout << "engine          " << s.engine << (s.output_forwarding ? " +OF" : "") << "\n"
            << "instructions    " << s.instructions << "\n"
            << "compute_ops     " << s.compute_ops << "\n"
            << "total_cycles    " << s.total_cycles << "\n"
            << "issue_interval  " << s.dominant_interval() << "\n"
            << "stall_cycles    " << s.stall_cycles << "\n"
            << "useful_macs     " << s.useful_macs << "\n"
            << "mac_utilization " << std::fixed << std::setprecision(4) << s.mac_utilization << "\n"
            << "seconds         " << std::scientific << std::setprecision(4) << s.seconds << "\n";
}

struct KernelArgs {
  std::size_t dm = 48, dn = 16, dk = 64;
  std::string sparsity = "4:4", variant = "unrolljam3", out, json;
  std::uint64_t base = kDefaultKernelBase;
};
void cmd_kernel(const KernelArgs& a) {
  const GemmSpec spec{a.dm, a.dn, a.dk, parse_sparsity(a.sparsity)};
  const KernelVariant v = parse_variant(a.variant);
  const auto k = generate_kernel(spec, v, a.base);
  const auto predicted = predicted_counts(spec, v);
  const auto observed = count_opcodes(k.program);
  if (!a.out.empty()) {
    std::string header = "# " + to_string(v) + " kernel, " + std::to_string(a.dm) + "x" + std::to_string(a.dn) + "x" +
                         std::to_string(a.dk) + " " + to_string(spec.sparsity) + "\n";
    write_text(a.out + ".vga", header + disassemble(k.program));
    write_text(a.out + ".manifest.txt", k.manifest.to_text());
  }
  if (!a.json.empty()) {
    Json j;
    j["manifest"] = to_json(k.manifest);
    j["predicted"] = to_json(predicted);
    j["observed"] = to_json(observed);
    j["register_pressure"] = Json{{"tregs", register_pressure(k.program).max_live_tregs},
                                  {"mregs", register_pressure(k.program).max_live_mregs}};
    write_text(a.json, j.dump(2) + "\n");
    if (a.json == "-") return;
  }
  if (a.out.empty()) std::cout << disassemble(k.program);
  std::cout << "# M_t=" << spec.m_tiles() << " N_t=" << spec.n_tiles() << " K_t=" << spec.k_tiles() << "\n";
  print_counts(std::cout, "# predicted", predicted);
  print_counts(std::cout, "# observed", observed);
}

struct RooflineArgs {
  double density = 1.0, bw = kMemBandwidthGBs, ai_min = 0.125, ai_max = 1024.0;
  std::size_t points = 57;
  double m = 0, n = 0, k = 0;
  std::string out = "-";
};
void cmd_roofline(const RooflineArgs& a) {
  if (a.m > 0 || a.n > 0 || a.k > 0) {
    if (!(a.m > 0 && a.n > 0 && a.k > 0)) throw ConfigError("--m, --n and --k go together");
    const auto w = gemm_roofline_workload(a.m, a.n, a.k, a.density);
    std::ostringstream os;
    os << "engine,arithmetic_intensity,effective_gflops\n";
    for (const auto& [name, peak] : {std::pair{"vector", kVectorPeakGflops}, std::pair{"matrix", kMatrixPeakGflops}}) {
      for (const EngineKind kind : {EngineKind::kDense, EngineKind::kSparse}) {
        os << (kind == EngineKind::kDense ? "dense_" : "sparse_") << name << "," << w.arithmetic_intensity() << ","
           << roofline_effective_throughput({peak, a.bw, kind, a.density}, w) << "\n";
      }
    }
    write_text(a.out, os.str());
    return;
  }
  write_text(a.out, roofline_csv(a.density, a.bw, a.ai_min, a.ai_max, a.points));
}

struct ReportArgs {
  std::vector<std::string> workloads, engines = {"vegeta-s-16-2+of", "vegeta-s-8-2+of", "vegeta-s-4-2+of",
                                                 "vegeta-s-2-2+of", "vegeta-s-1-2+of", "vegeta-d-16-1"};
  std::vector<std::string> sparsities = {"4:4", "2:4", "1:4"};
  double unstructured = 0.95;
  std::uint64_t seed = 42;
  std::string csv, json;
};
EngineRun parse_engine_run(std::string text) {
  EngineRun r;
  for (auto& ch : text) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (text.size() > 3 && text.substr(text.size() - 3) == "+of") {
    r.options.output_forwarding = true;
    text.resize(text.size() - 3);
  }
  r.config = preset(text);
  return r;
}
void cmd_report(const ReportArgs& a) {
  std::vector<Workload> ws;
  if (a.workloads.empty()) {
    ws = bundled_workloads();
  } else {
    for (const auto& w : a.workloads) ws.push_back(find_workload(w));
  }
  std::vector<EngineRun> engines;
  for (const auto& e : a.engines) engines.push_back(parse_engine_run(e));
  std::vector<Sparsity> sp;
  for (const auto& s : a.sparsities) sp.push_back(parse_sparsity(s));
  const auto report = speedup_report(ws, engines, sp);
  std::optional<UnstructuredSummary> un;
  if (a.unstructured > 0) un = estimate_unstructured_suite(ws, 1.0 - a.unstructured, a.seed);

  if (!a.csv.empty()) write_text(a.csv, report.to_csv() + (un ? "\n" + to_csv(*un) : std::string()));
  if (!a.json.empty()) {
    Json j = to_json(report);
    if (un) {
      j["unstructured"] = to_json(*un);
      j["unstructured"]["sparsity"] = a.unstructured;
      j["unstructured"]["seed"] = a.seed;
    }
    write_text(a.json, j.dump(2) + "\n");
    if (a.json == "-") return;
  }
  std::cout << "speedup vs " << report.baseline << " (cycles summed over " << ws.size() << " workloads)\n";
  std::cout << std::left << std::setw(22) << "engine" << std::setw(10) << "sparsity" << std::right << std::setw(14)
            << "cycles" << std::setw(10) << "speedup" << "\n";
  for (const auto& r : report.aggregate) {
    std::cout << std::left << std::setw(22) << r.engine << std::setw(10) << to_string(r.sparsity) << std::right
              << std::setw(14) << r.cycles << std::setw(10) << std::fixed << std::setprecision(3) << r.speedup << "\n";
  }
  if (un) {
    std::cout << std::left << std::setw(22) << "s-16-2 row-wise" << std::setw(10)
              << (std::to_string(static_cast<int>(a.unstructured * 100 + 0.5)) + "%") << std::right << std::setw(14)
              << un->sparse_cycles << std::setw(10) << std::fixed << std::setprecision(3) << un->speedup << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VEGETA sparse tile ISA toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vegeta 1.0.0");

  CompressArgs compress;
  auto* c = app.add_subcommand("compress", "Compress a dense BF16 tile to N:M form");
  c->add_option("--pattern", compress.pattern, "N:M pattern")->capture_default_str();
  c->add_option("input", compress.in, "Dense tile file")->required();
  c->add_option("output", compress.out, "Compressed tile file")->required();

  DecompressArgs decompress;
  auto* d = app.add_subcommand("decompress", "Expand a compressed tile to dense BF16");
  d->add_option("input", decompress.in, "Compressed tile file")->required();
  d->add_option("output", decompress.out, "Dense tile file")->required();

  TransformArgs transform;
  auto* t = app.add_subcommand("transform", "Group an unstructured tile into row-wise N:4 runs");
  t->add_option("input", transform.in, "Dense BF16 tile file")->required();
  t->add_option("prefix", transform.prefix, "Output prefix for run files and plan JSON")->required();
  t->add_option("--width", transform.width, "Expected tile width")->capture_default_str();

  AsmArgs asm_args;
  auto* as = app.add_subcommand("asm", "Assemble and validate a program, emitting JSON");
  as->add_option("input", asm_args.in, "Program text (.vga)")->required();
  as->add_option("output", asm_args.out, "JSON output ('-' for stdout)")->required();

  DisasmArgs disasm;
  auto* ds = app.add_subcommand("disasm", "Print a program (JSON or text) in canonical assembly");
  ds->add_option("input", disasm.in, "Program (.json or .vga)")->required();
  ds->add_option("-o,--output", disasm.out, "Output file")->capture_default_str();

  EmulateArgs emulate;
  auto* em = app.add_subcommand("emulate", "Run a program functionally");
  em->add_option("--program", emulate.program, "Program file")->required();
  em->add_option("--manifest", emulate.manifest, "Memory image manifest");
  em->add_option("--trace", emulate.trace, "JSON-lines retire trace");
  em->add_option("--dump", emulate.dumps, "ADDR:ROWSxCOLS:DTYPE[:STRIDE]=PATH");
  em->add_option("--json", emulate.json, "Trace statistics as JSON ('-' for stdout)");

  SimulateArgs simulate;
  auto* sm = app.add_subcommand("simulate", "Cycle-level engine simulation");
  sm->add_option("--program", simulate.program, "Program file")->required();
  sm->add_option("--config", simulate.config, "Engine config file");
  sm->add_option("--preset", simulate.preset_name, "Engine preset (default vegeta-s-16-2)");
  sm->add_flag("--of", simulate.of, "Enable output forwarding");
  sm->add_option("--load-latency", simulate.load_latency, "Fixed load/store latency in cycles");
  sm->add_option("--manifest", simulate.manifest, "Memory image, for exact tile_spmm_r MAC counts");
  sm->add_option("--trace", simulate.trace, "JSON-lines stage trace plus summary");
  sm->add_option("--json", simulate.json, "Summary as JSON ('-' for stdout)");

  KernelArgs kernel;
  auto* kn = app.add_subcommand("kernel", "Generate a tiled GEMM/SPMM kernel");
  kn->add_option("--dm", kernel.dm, "Rows of A and C")->capture_default_str();
  kn->add_option("--dn", kernel.dn, "Columns of B and C")->capture_default_str();
  kn->add_option("--dk", kernel.dk, "Reduction depth")->capture_default_str();
  kn->add_option("--sparsity", kernel.sparsity, "4:4, 2:4 or 1:4")->capture_default_str();
  kn->add_option("--variant", kernel.variant, "naive, regpromote or unrolljam3")->capture_default_str();
  kn->add_option("--base", kernel.base, "Base address of the operand layout");
  kn->add_option("--out", kernel.out, "Write OUT.vga and OUT.manifest.txt");
  kn->add_option("--json", kernel.json, "Manifest and counts as JSON ('-' for stdout)");

  RooflineArgs roofline;
  auto* rf = app.add_subcommand("roofline", "Roofline curves as CSV");
  rf->add_option("--density", roofline.density, "Fraction of non-zeros")->capture_default_str();
  rf->add_option("--bw", roofline.bw, "Memory bandwidth, GB/s")->capture_default_str();
  rf->add_option("--ai-min", roofline.ai_min)->capture_default_str();
  rf->add_option("--ai-max", roofline.ai_max)->capture_default_str();
  rf->add_option("--points", roofline.points)->capture_default_str();
  rf->add_option("--m", roofline.m, "GEMM rows (single-point mode)");
  rf->add_option("--n", roofline.n, "GEMM columns (single-point mode)");
  rf->add_option("--k", roofline.k, "GEMM depth (single-point mode)");
  rf->add_option("-o,--output", roofline.out)->capture_default_str();

  ReportArgs report;
  auto* rp = app.add_subcommand("report", "Speedup of engines over the dense baseline on the bundled layers");
  rp->add_option("--workloads", report.workloads, "Workload names (default: all twelve)");
  rp->add_option("--engines", report.engines, "Presets, '+of' enables forwarding")->capture_default_str();
  rp->add_option("--sparsity", report.sparsities, "Structured sparsities")->capture_default_str();
  rp->add_option("--unstructured", report.unstructured, "Unstructured sparsity for the row-wise estimate (0 = off)")
      ->capture_default_str();
  rp->add_option("--seed", report.seed)->capture_default_str();
  rp->add_option("--csv", report.csv, "CSV output");
  rp->add_option("--json", report.json, "JSON output ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error[Usage]: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*c) cmd_compress(compress);
    if (*d) cmd_decompress(decompress);
    if (*t) cmd_transform(transform);
    if (*as) cmd_asm(asm_args);
    if (*ds) cmd_disasm(disasm);
    if (*em) cmd_emulate(emulate);
    if (*sm) cmd_simulate(simulate);
    if (*kn) cmd_kernel(kernel);
    if (*rf) cmd_roofline(roofline);
    if (*rp) cmd_report(report);
  } catch (const Error& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[Internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
