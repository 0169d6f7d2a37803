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

// Roofline model, trace statistics and cross-engine speedup reports.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vegeta/emulator.hpp"
#include "vegeta/engine_config.hpp"
#include "vegeta/kernel_codegen.hpp"
#include "vegeta/nm_sparsity.hpp"
#include "vegeta/pipeline.hpp"

namespace vegeta {

// ---------------------------------------------------------------- roofline

inline constexpr double kMatrixPeakGflops = 512.0;
inline constexpr double kVectorPeakGflops = 64.0;
inline constexpr double kMemBandwidthGBs = 94.0;

struct RooflineParams {
  double peak_gflops = kMatrixPeakGflops;
  double mem_bw_gbs = kMemBandwidthGBs;
  EngineKind kind = EngineKind::kSparse;
  double density = 1.0;

  void check() const {
    if (!(peak_gflops > 0) || !(mem_bw_gbs > 0)) throw ConfigError("roofline peak and bandwidth must be positive");
    if (!(density > 0) || density > 1) throw ConfigError("density must lie in (0, 1]");
  }
  /// Effectual compute roof: dense engines burn MACs on zeros.
  double compute_roof() const { return kind == EngineKind::kSparse ? peak_gflops : peak_gflops * density; }
};

struct RooflineWorkload {
  double effectual_flops = 0;
  double bytes_moved = 0;

  double arithmetic_intensity() const { return effectual_flops / bytes_moved; }
};

inline double roofline_effective_throughput(const RooflineParams& p, const RooflineWorkload& w) {
  p.check();
  if (!(w.effectual_flops > 0) || !(w.bytes_moved > 0)) throw ConfigError("workload flops and bytes must be positive");
  return std::min(p.compute_roof(), w.arithmetic_intensity() * p.mem_bw_gbs);
}

/// Minimal-traffic GEMM: compressed A (values, plus 2-bit indices when
/// sparse), dense BF16 B, FP32 C read and written once.
inline RooflineWorkload gemm_roofline_workload(double m, double n, double k, double density) {
  const double a_values = m * k * density * 2.0;
  const double a_meta = density < 1.0 ? m * k * density * 2.0 / 8.0 : 0.0;
  RooflineWorkload w;
  w.effectual_flops = 2.0 * m * n * k * density;
  w.bytes_moved = a_values + a_meta + k * n * 2.0 + 2.0 * m * n * 4.0;
  return w;
}

/// Log-spaced sweep of arithmetic intensity for the four engine classes.
inline std::string roofline_csv(double density, double mem_bw_gbs = kMemBandwidthGBs, double ai_min = 0.125,
                                double ai_max = 1024.0, std::size_t points = 57) {
  if (points < 2 || !(ai_min > 0) || !(ai_max > ai_min)) throw ConfigError("bad roofline sweep range");
  std::ostringstream os;
  os << "arithmetic_intensity,dense_vector,sparse_vector,dense_matrix,sparse_matrix\n";
  const double step = std::log(ai_max / ai_min) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double ai = ai_min * std::exp(step * static_cast<double>(i));
    const RooflineWorkload w{ai, 1.0};
    os << ai;
    for (const double peak : {kVectorPeakGflops, kMatrixPeakGflops}) {
      for (const EngineKind kind : {EngineKind::kDense, EngineKind::kSparse}) {
        os << "," << roofline_effective_throughput({peak, mem_bw_gbs, kind, density}, w);
      }
    }
    os << "\n";
  }
  return os.str();
}

// ------------------------------------------------------------- trace stats

struct CountDelta {
  std::int64_t tile_loads = 0;
  std::int64_t metadata_loads = 0;
  std::int64_t stores = 0;
  std::int64_t computes = 0;

  bool zero() const { return tile_loads == 0 && metadata_loads == 0 && stores == 0 && computes == 0; }
};

struct TraceStats {
  std::map<std::string, std::uint64_t> opcode_counts;
  PredictedCounts counts;
  std::optional<PredictedCounts> predicted;
  std::optional<CountDelta> delta;  // observed - predicted
  std::uint64_t cycles = 0;
  std::uint64_t useful_macs = 0;
  std::uint64_t stall_cycles = 0;
  double utilization = 0.0;
  std::map<std::uint64_t, std::uint64_t> issue_intervals;

  void set_prediction(const PredictedCounts& p) {
    predicted = p;
    auto d = [](std::uint64_t a, std::uint64_t b) { return static_cast<std::int64_t>(a) - static_cast<std::int64_t>(b); };
    delta = CountDelta{d(counts.tile_loads, p.tile_loads), d(counts.metadata_loads, p.metadata_loads),
                       d(counts.stores, p.stores), d(counts.computes, p.computes)};
  }
};

namespace detail {
inline void tally(TraceStats& st, Opcode op) {
  ++st.opcode_counts[std::string(mnemonic(op))];
  if (is_tile_load(op)) ++st.counts.tile_loads;
  if (op == Opcode::kTileLoadM) ++st.counts.metadata_loads;
  if (is_store(op)) ++st.counts.stores;
  if (is_compute(op)) ++st.counts.computes;
}
}  // namespace detail

/// Statistics of a functional (emulator) trace; no timing.
inline TraceStats trace_stats(const std::vector<RetireRecord>& trace) {
  TraceStats st;
  for (const auto& r : trace) {
    detail::tally(st, r.inst.opcode);
    st.useful_macs += r.useful_macs;
  }
  return st;
}

inline TraceStats trace_stats(const PipelineTrace& trace) {
  TraceStats st;
  std::optional<std::uint64_t> prev;
  for (const auto& r : trace.records) {
    detail::tally(st, r.opcode);
    if (!r.is_compute()) continue;
    if (prev) ++st.issue_intervals[r.issue - *prev];
    prev = r.issue;
  }
  st.cycles = trace.total_cycles;
  st.useful_macs = trace.useful_macs;
  st.stall_cycles = trace.stall_cycles;
  st.utilization = trace.mac_utilization;
  return st;
}

// --------------------------------------------------------------- workloads

struct Workload {
  std::string name;
  std::size_t m = 0;  // output channels / rows of the weight
  std::size_t n = 0;  // output pixels / tokens
  std::size_t k = 0;  // reduction

  std::uint64_t macs() const { return static_cast<std::uint64_t>(m) * n * k; }
};

/// Convolution lowered by im2col: M = K_out, N = Y*X, K = C*R*S.
inline Workload conv_workload(std::string name, std::size_t k_out, std::size_t c, std::size_t y, std::size_t x,
                              std::size_t r, std::size_t s) {
  return {std::move(name), k_out, y * x, c * r * s};
}

inline std::vector<Workload> bundled_workloads() {
  return {
      conv_workload("ResNet50-L1", 64, 256, 56, 56, 1, 1),
      conv_workload("ResNet50-L2", 64, 64, 56, 56, 3, 3),
      conv_workload("ResNet50-L3", 256, 64, 56, 56, 1, 1),
      conv_workload("ResNet50-L4", 128, 128, 28, 28, 3, 3),
      conv_workload("ResNet50-L5", 512, 128, 28, 28, 1, 1),
      conv_workload("ResNet50-L6", 256, 256, 14, 14, 3, 3),
      {"BERT-L1", 512, 768, 768},
      {"BERT-L2", 512, 512, 768},
      {"BERT-L3", 512, 768, 512},
      {"GPT-L1", 256, 256, 2048},
      {"GPT-L2", 512, 512, 2048},
      {"GPT-L3", 256, 256, 12288},
  };
}

inline Workload find_workload(std::string_view name) {
  for (auto& w : bundled_workloads()) {
    if (w.name == name) return w;
  }
  throw ConfigError("unknown workload '" + std::string(name) + "'");
}

inline std::size_t round_up(std::size_t v, std::size_t q) { return (v + q - 1) / q * q; }

/// GEMM dims an unroll-and-jam-3 kernel runs for `w`: M padded to 48 rows,
/// N to 16 columns, K to the sparsity's tile depth.
inline GemmSpec padded_gemm(const Workload& w, Sparsity s) {
  GemmSpec g;
  g.sparsity = s;
  g.d_m = round_up(w.m, 3 * GemmSpec::t_m);
  g.d_n = round_up(w.n, GemmSpec::t_n);
  g.d_k = round_up(w.k, g.t_k());
  return g;
}

// ----------------------------------------------------------- speedup report

struct EngineRun {
  EngineConfig config;
  SimOptions options;

  std::string label() const { return config.name + (options.output_forwarding ? "+OF" : ""); }
};

struct ReportRow {
  std::string workload;
  std::string engine;
  Sparsity sparsity = Sparsity::kDense;
  GemmSpec gemm;
  std::uint64_t compute_ops = 0;
  std::uint64_t cycles = 0;
  std::uint64_t baseline_cycles = 0;
  double speedup = 0.0;
};

struct AggregateRow {
  std::string engine;
  Sparsity sparsity = Sparsity::kDense;
  std::uint64_t cycles = 0;
  std::uint64_t baseline_cycles = 0;
  double speedup = 0.0;
};

struct SpeedupReport {
  std::string baseline;
  std::vector<ReportRow> rows;
  std::vector<AggregateRow> aggregate;  // summed over workloads

  const AggregateRow& find(std::string_view engine, Sparsity s) const {
    for (const auto& a : aggregate) {
      if (a.engine == engine && a.sparsity == s) return a;
    }
    throw ConfigError("report has no row for " + std::string(engine) + " " + to_string(s));
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "workload,engine,sparsity,d_m,d_n,d_k,compute_ops,cycles,baseline_cycles,speedup\n";
    for (const auto& r : rows) {
      os << r.workload << "," << r.engine << "," << to_string(r.sparsity) << "," << r.gemm.d_m << "," << r.gemm.d_n
         << "," << r.gemm.d_k << "," << r.compute_ops << "," << r.cycles << "," << r.baseline_cycles << ","
         << r.speedup << "\n";
    }
    for (const auto& a : aggregate) {
      os << "ALL," << a.engine << "," << to_string(a.sparsity) << ",,,,," << a.cycles << "," << a.baseline_cycles
         << "," << a.speedup << "\n";
    }
    return os.str();
  }
};

inline EngineRun report_baseline() { return {preset("vegeta-d-1-2"), SimOptions{}}; }

inline std::uint64_t kernel_cycles(const GemmSpec& gemm, const EngineRun& run, std::uint64_t* compute_ops = nullptr) {
  const auto kernel = generate_kernel(gemm, KernelVariant::kUnrollJam3);
  const auto trace = schedule(kernel.program, run.config, run.options);
  if (compute_ops) *compute_ops = count_opcodes(kernel.program).computes;
  return trace.total_cycles;
}

/// Cycles of every (workload, engine, sparsity) against a dense kernel on
/// D-1-2 without forwarding. Dense engines only run 4:4. Simulations fan
/// out with std::async; output order is fixed by the inputs.
inline SpeedupReport speedup_report(const std::vector<Workload>& workloads, const std::vector<EngineRun>& engines,
                                    const std::vector<Sparsity>& sparsities = {Sparsity::kDense, Sparsity::k2of4,
                                                                               Sparsity::k1of4},
                                    bool parallel = true) {
  const EngineRun base = report_baseline();
  SpeedupReport report;
  report.baseline = base.label();

  struct Job {
    std::size_t workload;
    std::optional<std::size_t> engine;  // empty = baseline
    Sparsity sparsity;
  };
  std::vector<Job> jobs;
  for (std::size_t w = 0; w < workloads.size(); ++w) {
    jobs.push_back({w, std::nullopt, Sparsity::kDense});
    for (std::size_t e = 0; e < engines.size(); ++e) {
      for (const Sparsity s : sparsities) {
        if (s == Sparsity::kRowWise) continue;
        if (s != Sparsity::kDense && engines[e].config.kind == EngineKind::kDense) continue;
        jobs.push_back({w, e, s});
      }
    }
  }
  struct Outcome {
    GemmSpec gemm;
    std::uint64_t cycles = 0;
    std::uint64_t compute_ops = 0;
  };
  auto run_job = [&](const Job& j) {
    Outcome o;
    o.gemm = padded_gemm(workloads[j.workload], j.sparsity);
    o.cycles = kernel_cycles(o.gemm, j.engine ? engines[*j.engine] : base, &o.compute_ops);
    return o;
  };
  std::vector<Outcome> outcomes(jobs.size());
  if (parallel) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) outcomes[i] = run_job(jobs[i]);
    };
    const unsigned n_workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 8u));
    std::vector<std::future<void>> futures;
    for (unsigned t = 0; t < n_workers; ++t) futures.push_back(std::async(std::launch::async, worker));
    for (auto& f : futures) f.get();
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i) outcomes[i] = run_job(jobs[i]);
  }

  std::vector<std::uint64_t> baseline(workloads.size(), 0);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!jobs[i].engine) baseline[jobs[i].workload] = outcomes[i].cycles;
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& j = jobs[i];
    if (!j.engine) continue;
    ReportRow row;
    row.workload = workloads[j.workload].name;
    row.engine = engines[*j.engine].label();
    row.sparsity = j.sparsity;
    row.gemm = outcomes[i].gemm;
    row.compute_ops = outcomes[i].compute_ops;
    row.cycles = outcomes[i].cycles;
    row.baseline_cycles = baseline[j.workload];
    row.speedup = static_cast<double>(row.baseline_cycles) / static_cast<double>(row.cycles);
    report.rows.push_back(row);

    auto it = std::find_if(report.aggregate.begin(), report.aggregate.end(),
                           [&](const AggregateRow& a) { return a.engine == row.engine && a.sparsity == row.sparsity; });
    if (it == report.aggregate.end()) {
      report.aggregate.push_back({row.engine, row.sparsity, 0, 0, 0.0});
      it = std::prev(report.aggregate.end());
    }
    it->cycles += row.cycles;
    it->baseline_cycles += row.baseline_cycles;
  }
  for (auto& a : report.aggregate) a.speedup = static_cast<double>(a.baseline_cycles) / static_cast<double>(a.cycles);
  return report;
}

// ---------------------------------------- unstructured sparsity via row-wise

inline constexpr std::size_t kRowWiseSlab = 64;       // K columns per row-wise tile
inline constexpr std::size_t kRowWiseQuantaPerOp = 8; // engine columns per tile_spmm_r
inline constexpr std::size_t kDenseTileK = 32;
inline constexpr std::uint64_t kIssueInterval = 16;

struct UnstructuredEstimate {
  std::string workload;
  double density = 0.0;
  std::uint64_t spmm_r_ops = 0;  // per 16-column N tile
  std::uint64_t sparse_compute_cycles = 0;
  std::uint64_t dense_compute_cycles = 0;
  std::uint64_t sparse_memory_cycles = 0;
  std::uint64_t dense_memory_cycles = 0;
  double speedup = 0.0;

  std::uint64_t sparse_cycles() const { return std::max(sparse_compute_cycles, sparse_memory_cycles); }
  std::uint64_t dense_cycles() const { return std::max(dense_compute_cycles, dense_memory_cycles); }
};

/// Draws a Bernoulli(density) weight, splits K into 64-wide slabs, groups
/// each slab's rows into row-wise N:4 runs and packs the runs into
/// tile_spmm_r ops of 8 quanta each (a quantum is one 4:4 row, two 2:4 rows
/// or four 1:4 rows). Every op issues once per N tile at the 16-cycle
/// interval. The dense reference issues tile_gemm at the same interval over
/// 16 x 32 A tiles. Both sides are floored by the memory roof.
inline UnstructuredEstimate estimate_unstructured(const Workload& w, double density, std::uint64_t seed,
                                                  const EngineConfig& sparse_engine = preset("vegeta-s-16-2"),
                                                  double mem_bw_gbs = kMemBandwidthGBs, double clock_ghz = 0.5) {
  if (!(density > 0) || density > 1) throw ConfigError("density must lie in (0, 1]");
  UnstructuredEstimate est;
  est.workload = w.name;
  est.density = density;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution nz(density);
  const std::size_t slabs = (w.k + kRowWiseSlab - 1) / kRowWiseSlab;
  std::uint64_t a_values = 0;
  DenseTile slab = DenseTile::zeros(w.m, kRowWiseSlab);
  for (std::size_t s = 0; s < slabs; ++s) {
    const std::size_t width = std::min(kRowWiseSlab, w.k - s * kRowWiseSlab);
    for (std::size_t r = 0; r < w.m; ++r) {
      for (std::size_t c = 0; c < kRowWiseSlab; ++c) {
        slab.at(r, c) = c < width && nz(rng) ? 0x3F80u : 0u;
      }
    }
    const RowWiseTile rw = transform_unstructured_to_rowwise(slab, kRowWiseSlab);
    const RowWiseOccupancy occ = rowwise_occupancy(rw.plan, sparse_engine);
    est.spmm_r_ops += (occ.cols_used + kRowWiseQuantaPerOp - 1) / kRowWiseQuantaPerOp;
    a_values += occ.cols_used * kRowWiseSlab;
  }
  const std::uint64_t n_tiles = (w.n + GemmSpec::t_n - 1) / GemmSpec::t_n;
  const std::uint64_t m_tiles = (w.m + GemmSpec::t_m - 1) / GemmSpec::t_m;
  const std::uint64_t k_tiles = (w.k + kDenseTileK - 1) / kDenseTileK;
  est.sparse_compute_cycles = est.spmm_r_ops * n_tiles * kIssueInterval;
  est.dense_compute_cycles = m_tiles * n_tiles * k_tiles * kIssueInterval;

  const double bytes_per_cycle = mem_bw_gbs / clock_ghz;
  const double shared = static_cast<double>(w.k) * w.n * 2.0 + 2.0 * w.m * w.n * 4.0;
  const double sparse_bytes = shared + static_cast<double>(a_values) * 2.0 + static_cast<double>(a_values) / 4.0 +
                              static_cast<double>(slabs) * kRowDescriptorBytes * ((w.m + 31) / 32);
  const double dense_bytes = shared + static_cast<double>(w.m) * w.k * 2.0;
  est.sparse_memory_cycles = static_cast<std::uint64_t>(std::ceil(sparse_bytes / bytes_per_cycle));
  est.dense_memory_cycles = static_cast<std::uint64_t>(std::ceil(dense_bytes / bytes_per_cycle));
  est.speedup = static_cast<double>(est.dense_cycles()) / static_cast<double>(est.sparse_cycles());
  return est;
}

struct UnstructuredSummary {
  std::vector<UnstructuredEstimate> per_workload;
  std::uint64_t sparse_cycles = 0;
  std::uint64_t dense_cycles = 0;
  double speedup = 0.0;
};

inline UnstructuredSummary estimate_unstructured_suite(const std::vector<Workload>& workloads, double density,
                                                       std::uint64_t seed) {
  UnstructuredSummary s;
  for (std::size_t i = 0; i < workloads.size(); ++i) {
    s.per_workload.push_back(estimate_unstructured(workloads[i], density, seed + i));
    s.sparse_cycles += s.per_workload.back().sparse_cycles();
    s.dense_cycles += s.per_workload.back().dense_cycles();
  }
  if (s.sparse_cycles > 0) s.speedup = static_cast<double>(s.dense_cycles) / static_cast<double>(s.sparse_cycles);
  return s;
}

inline std::string to_csv(const UnstructuredSummary& s) {
  std::ostringstream os;
  os << "workload,density,spmm_r_ops,sparse_cycles,dense_cycles,speedup\n";
  for (const auto& e : s.per_workload) {
    os << e.workload << "," << e.density << "," << e.spmm_r_ops << "," << e.sparse_cycles() << "," << e.dense_cycles()
       << "," << e.speedup << "\n";
  }
  os << "ALL,,," << s.sparse_cycles << "," << s.dense_cycles << "," << s.speedup << "\n";
  return os.str();
}

}  // namespace vegeta
