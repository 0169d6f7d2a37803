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

// Cycle-level schedule of a program on one matrix engine.
//
// Compute ops occupy the WL, FF, FS, DR and RD (reduction) stages back to
// back and enter the engine in program order; no two ops share a stage on
// the same cycle. Loads and stores never occupy a stage: they complete a fixed
// latency after their inputs are ready (stores wait for the full writeback
// of their source, loads for earlier stores to overlapping 64-byte lines).
// Register writes are renamed, so only read-after-write hazards stall.
//
// Dependency rules for a compute op starting WL at cycle s:
//   * A tile and metadata ready by s (weights are loaded first);
//   * B tile and row descriptor ready by the start of FF;
//   * C (dst/src0) produced by an earlier compute: FF may start once that
//     producer's writeback completes, or, with output forwarding,
//     n_rows + log2(beta) cycles after the producer's FF started.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vegeta/emulator.hpp"
#include "vegeta/engine_config.hpp"
#include "vegeta/isa.hpp"
#include "vegeta/nm_sparsity.hpp"

namespace vegeta {

struct StageWindow {
  std::uint64_t start = 0;
  std::uint64_t end = 0;  // exclusive

  std::uint64_t length() const { return end - start; }
  bool overlaps(const StageWindow& o) const { return start < o.end && o.start < end; }
};

enum class Stage : std::size_t { kWL, kFF, kFS, kDR, kRD };
inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<std::string_view, kStageCount> kStageNames = {"WL", "FF", "FS", "DR", "RD"};

struct TraceRecord {
  std::size_t index = 0;
  Opcode opcode = Opcode::kTileLoadT;
  std::uint64_t issue = 0;     // WL start for computes
  std::uint64_t complete = 0;  // writeback end for computes
  std::array<StageWindow, kStageCount> stages{};  // computes only
  StageWindow writeback{};                        // computes only
  std::uint64_t stall = 0;                        // cycles lost to data dependencies
  std::uint64_t useful_macs = 0;

  bool is_compute() const { return vegeta::is_compute(opcode); }
  const StageWindow& stage(Stage s) const { return stages[static_cast<std::size_t>(s)]; }
};

struct PipelineTrace {
  std::vector<TraceRecord> records;
  std::uint64_t total_cycles = 0;
  std::uint64_t useful_macs = 0;
  std::uint64_t stall_cycles = 0;
  double mac_utilization = 0.0;
};

namespace detail {

struct RegTiming {
  std::uint64_t ready = 0;     // full writeback
  std::uint64_t forward = 0;   // earliest FF start of a forwarded consumer
  bool from_compute = false;
};

class LineReadiness {
 public:
  static constexpr std::uint64_t kLine = 64;

  std::uint64_t ready(std::uint64_t addr, std::size_t len) const {
    std::uint64_t t = 0;
    if (lines_.empty() || len == 0) return 0;
    const auto first = addr / kLine, last = (addr + len - 1) / kLine;
    for (auto it = lines_.lower_bound(first); it != lines_.end() && it->first <= last; ++it) t = std::max(t, it->second);
    return t;
  }
  void mark(std::uint64_t addr, std::size_t len, std::uint64_t t) {
    const auto first = addr / kLine, last = (addr + len - 1) / kLine;
    for (auto l = first; l <= last; ++l) {
      auto& v = lines_[l];
      v = std::max(v, t);
    }
  }

 private:
  std::map<std::uint64_t, std::uint64_t> lines_;
};

}  // namespace detail

/// Greedy in-order schedule. `useful_macs`, when given, supplies per
/// instruction MAC counts (needed for exact tile_spmm_r accounting);
/// otherwise every compute op counts 8192.
inline PipelineTrace schedule(const Program& program, const EngineConfig& config, const SimOptions& options,
                              const std::vector<std::uint64_t>* useful_macs = nullptr) {
  PipelineTrace trace;
  trace.records.reserve(program.size());
  const StageLatencies lat = config.stages();
  const std::array<std::uint64_t, kStageCount> dur = {lat.wl, lat.ff, lat.fs, lat.dr, lat.rd};
  std::array<std::uint64_t, kStageCount> offset{};
  for (std::size_t k = 1; k < kStageCount; ++k) offset[k] = offset[k - 1] + dur[k - 1];
  const std::uint64_t forward_delay = config.n_rows + config.reduction_latency;

  std::array<std::uint64_t, kStageCount> stage_free{};
  std::array<detail::RegTiming, kTregCount> tregs{};
  std::array<detail::RegTiming, kMregCount> mregs{};
  detail::LineReadiness memory;
  std::uint64_t last_issue = 0;

  auto timing_of = [&](RegisterId r) -> std::span<detail::RegTiming> {
    if (r.cls == RegClass::kM) return std::span(mregs).subspan(r.index, 1);
    return std::span(tregs).subspan(r.first_treg(), r.treg_count());
  };
  auto full_ready = [&](RegisterId r) {
    std::uint64_t t = 0;
    for (const auto& x : timing_of(r)) t = std::max(t, x.ready);
    return t;
  };

  for (std::size_t i = 0; i < program.size(); ++i) {
    const Instruction& inst = program.instructions[i];
    if (auto d = validate_instruction(inst, i); !d.empty()) throw BadOperandClass(d.front().message);
    if (!config.supports(inst.opcode)) {
      throw IllegalOpcodeForConfig("instruction " + std::to_string(i) + ": " + std::string(mnemonic(inst.opcode)) +
                                   " cannot run on dense engine " + config.name);
    }
    const auto& info = opcode_info(inst.opcode);
    TraceRecord rec;
    rec.index = i;
    rec.opcode = inst.opcode;

    if (info.kind == OpKind::kLoad) {
      const std::size_t len = inst.opcode == Opcode::kTileLoadM ? kMregBytes : kTileRowBytes;
      const std::size_t rows = inst.opcode == Opcode::kTileLoadM ? 1 : info.rows;
      std::uint64_t t = 0;
      for (std::size_t r = 0; r < rows; ++r) t = std::max(t, memory.ready(inst.addr + r * inst.stride, len));
      rec.issue = t;
      rec.complete = t + options.load_latency;
      for (auto& x : timing_of(inst.reg)) x = {rec.complete, rec.complete, false};
    } else if (info.kind == OpKind::kStore) {
      rec.issue = full_ready(inst.reg);
      rec.complete = rec.issue + options.load_latency;
      for (std::size_t r = 0; r < info.rows; ++r) memory.mark(inst.addr + r * inst.stride, kTileRowBytes, rec.complete);
    } else {
      // Structural: every stage must be free when this op reaches it.
      std::uint64_t s_struct = last_issue;
      for (std::size_t k = 0; k < kStageCount; ++k) {
        if (dur[k] == 0) continue;
        if (stage_free[k] > offset[k]) s_struct = std::max(s_struct, stage_free[k] - offset[k]);
      }
      auto at_least = [](std::uint64_t need, std::uint64_t off) { return need > off ? need - off : 0; };
      std::uint64_t s_dep = 0;
      s_dep = std::max(s_dep, full_ready(inst.src1));
      if (inst.meta) s_dep = std::max(s_dep, full_ready(*inst.meta));
      s_dep = std::max(s_dep, at_least(full_ready(inst.src2), offset[1]));
      if (inst.row_meta_addr) {
        s_dep = std::max(s_dep, at_least(memory.ready(*inst.row_meta_addr, kRowDescriptorBytes), offset[1]));
      }
      for (const auto& x : timing_of(inst.reg)) {
        const std::uint64_t need = x.from_compute && options.output_forwarding ? x.forward : x.ready;
        s_dep = std::max(s_dep, at_least(need, offset[1]));
      }
      const std::uint64_t s = std::max(s_struct, s_dep);
      rec.stall = s - s_struct;
      rec.issue = s;
      for (std::size_t k = 0; k < kStageCount; ++k) {
        rec.stages[k] = {s + offset[k], s + offset[k] + dur[k]};
        if (dur[k] != 0) stage_free[k] = rec.stages[k].end;
      }
      rec.complete = rec.stages[kStageCount - 1].end;
      const std::uint64_t ff_start = rec.stages[1].start;
      rec.writeback = {ff_start + forward_delay, rec.complete};
      rec.useful_macs = useful_macs && i < useful_macs->size() ? (*useful_macs)[i] : useful_mac_count(inst);
      for (auto& x : timing_of(inst.reg)) x = {rec.complete, ff_start + forward_delay, true};
      last_issue = s;
      trace.useful_macs += rec.useful_macs;
      trace.stall_cycles += rec.stall;
    }
    trace.total_cycles = std::max(trace.total_cycles, rec.complete);
    trace.records.push_back(rec);
  }
  if (trace.total_cycles > 0) {
    trace.mac_utilization =
        static_cast<double>(trace.useful_macs) / (static_cast<double>(config.total_macs) * trace.total_cycles);
  }
  return trace;
}

/// Fixed-length stage timeline of one op, WL start = 0.
inline std::uint64_t single_op_latency(const EngineConfig& config) { return config.stages().latency(); }

struct SimulationSummary {
  std::string engine;
  bool output_forwarding = false;
  double clock_ghz = 0.5;
  std::uint64_t instructions = 0;
  std::uint64_t total_cycles = 0;
  std::uint64_t compute_ops = 0;
  std::uint64_t useful_macs = 0;
  std::uint64_t stall_cycles = 0;
  double mac_utilization = 0.0;
  double seconds = 0.0;
  std::map<std::string, std::uint64_t> opcode_counts;
  std::map<std::uint64_t, std::uint64_t> issue_intervals;  // gap between consecutive WL starts -> count

  /// Most frequent gap between consecutive compute issues (0 if fewer than two).
  std::uint64_t dominant_interval() const {
    std::uint64_t best = 0, count = 0;
    for (const auto& [gap, n] : issue_intervals) {
      if (n > count) {
        best = gap;
        count = n;
      }
    }
    return best;
  }
};

struct SimulationResult {
  PipelineTrace trace;
  SimulationSummary summary;
};

inline SimulationSummary summarize(const PipelineTrace& trace, const EngineConfig& config, const SimOptions& options) {
  SimulationSummary s;
  s.engine = config.name;
  s.output_forwarding = options.output_forwarding;
  s.clock_ghz = options.clock_ghz;
  s.instructions = trace.records.size();
  s.total_cycles = trace.total_cycles;
  s.useful_macs = trace.useful_macs;
  s.stall_cycles = trace.stall_cycles;
  s.mac_utilization = trace.mac_utilization;
  s.seconds = static_cast<double>(trace.total_cycles) / (options.clock_ghz * 1e9);
  std::optional<std::uint64_t> prev;
  for (const auto& r : trace.records) {
    ++s.opcode_counts[std::string(mnemonic(r.opcode))];
    if (!r.is_compute()) continue;
    ++s.compute_ops;
    if (prev) ++s.issue_intervals[r.issue - *prev];
    prev = r.issue;
  }
  return s;
}

inline SimulationResult simulate_kernel(const Program& program, const EngineConfig& config, const SimOptions& options,
                                        const std::vector<std::uint64_t>* useful_macs = nullptr) {
  SimulationResult out;
  out.trace = schedule(program, config, options, useful_macs);
  out.summary = summarize(out.trace, config, options);
  return out;
}

/// True when no two compute ops overlap in the same stage.
inline bool stages_exclusive(const PipelineTrace& trace) {
  for (std::size_t k = 0; k < kStageCount; ++k) {
    std::vector<StageWindow> w;
    for (const auto& r : trace.records) {
      if (r.is_compute() && r.stages[k].length() > 0) w.push_back(r.stages[k]);
    }
    std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < w.size(); ++i) {
      if (w[i].start < w[i - 1].end) return false;
    }
  }
  return true;
}

/// Executes a compute op the way a beta-lane PU column reduces: the
/// effective-k range is split into beta contiguous segments, each
/// accumulated from zero in ascending k, the partial sums are combined by a
/// balanced pairwise tree, and the total is added to C.
inline StepResult exec_lane_partitioned(ArchState& s, const Instruction& inst, unsigned beta) {
  if (!is_compute(inst.opcode)) return exec_instruction(s, inst);
  if (auto diags = validate_instruction(inst, 0); !diags.empty()) throw BadOperandClass(diags.front().message);
  if (!is_power_of_two(beta)) throw ConfigError("beta must be a power of two");
  std::optional<RowDescriptor> desc;
  if (inst.opcode == Opcode::kTileSpmmR) desc = RowDescriptor::decode(s.memory.read_u64(*inst.row_meta_addr));
  const auto rows = detail::decode_a(s, inst, desc);
  const std::size_t depth = detail::b_depth(inst.opcode);
  const std::size_t seg = depth / beta;
  std::vector<float> c(rows.size() * 16);
  std::vector<float> lanes(beta);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t n = 0; n < 16; ++n) {
      std::fill(lanes.begin(), lanes.end(), 0.0f);
      for (const auto& [a, k] : rows[r].slots) {
        lanes[k / seg] += a.to_float() * s.bf16(inst.src2, n * depth + k).to_float();
      }
      for (std::size_t width = beta; width > 1; width /= 2) {
        for (std::size_t l = 0; l < width / 2; ++l) lanes[l] = lanes[2 * l] + lanes[2 * l + 1];
      }
      c[r * 16 + n] = s.fp32(inst.reg, r * 16 + n) + lanes[0];
    }
  }
  for (std::size_t i = 0; i < c.size(); ++i) s.set_fp32(inst.reg, i, c[i]);
  ++s.retired;
  StepResult res{inst.opcode};
  res.useful_macs = desc ? useful_mac_count(inst, *desc) : useful_mac_count(inst);
  return res;
}

/// Engine columns a row-wise tile occupies: N4:4 + N2:4/2 + N1:4/4, in units
/// where a full 512-value payload fills 8 columns.
struct RowWiseOccupancy {
  std::size_t cols_used = 0;
  std::size_t h_a = 0;
  std::size_t capacity = 8;

  double utilization() const { return static_cast<double>(cols_used) / static_cast<double>(capacity); }
};

inline RowWiseOccupancy rowwise_occupancy(std::span<const RowWisePlan::Run> runs, const EngineConfig& config) {
  if (config.kind != EngineKind::kSparse) throw ConfigError(config.name + " has no row-wise N:4 support");
  check_pseudo_grouping(runs);
  std::size_t n4 = 0, n2 = 0, n1 = 0;
  for (const auto& run : runs) {
    if (run.pattern.m != 4) throw GroupingViolation("row-wise runs must use m = 4");
    switch (run.pattern.n) {
      case 4: n4 += run.length; break;
      case 2: n2 += run.length; break;
      case 1: n1 += run.length; break;
      default: throw GroupingViolation("row-wise runs support n in {1, 2, 4}");
    }
  }
  RowWiseOccupancy occ;
  occ.cols_used = n4 + n2 / 2 + n1 / 4;
  occ.h_a = n4 + n2 + n1;
  return occ;
}

inline RowWiseOccupancy rowwise_occupancy(const RowWisePlan& plan, const EngineConfig& config) {
  return rowwise_occupancy(plan.group_runs, config);
}

}  // namespace vegeta
