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

// JSON views of programs, traces and reports (nlohmann/json).

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "vegeta/analysis.hpp"
#include "vegeta/assembler.hpp"
#include "vegeta/emulator.hpp"
#include "vegeta/kernel_codegen.hpp"
#include "vegeta/pipeline.hpp"

namespace vegeta {

using Json = nlohmann::ordered_json;

inline Json to_json(const Instruction& inst) {
  const auto& info = opcode_info(inst.opcode);
  Json j;
  j["op"] = std::string(info.mnemonic);
  switch (info.kind) {
    case OpKind::kLoad:
      j["dst"] = inst.reg.name();
      j["addr"] = inst.addr;
      if (inst.opcode != Opcode::kTileLoadM) j["stride"] = inst.stride;
      break;
    case OpKind::kStore:
      j["src"] = inst.reg.name();
      j["addr"] = inst.addr;
      j["stride"] = inst.stride;
      break;
    case OpKind::kCompute:
      j["dst"] = inst.reg.name();
      j["src1"] = inst.src1.name();
      j["src2"] = inst.src2.name();
      if (inst.meta) j["meta"] = inst.meta->name();
      if (inst.row_meta_addr) j["row_meta_addr"] = *inst.row_meta_addr;
      break;
  }
  return j;
}

/// Inverse of to_json(Instruction), routed through the assembler so the
/// same operand checks apply.
inline Instruction instruction_from_json(const Json& j) {
  try {
    const std::string op = j.at("op").get<std::string>();
    const auto opc = opcode_from_mnemonic(op);
    if (!opc) throw ParseError("unknown mnemonic '" + op + "'");
    const auto& info = opcode_info(*opc);
    auto addr = [&](const char* key) { return detail::hex(j.at(key).get<std::uint64_t>()); };
    std::string text = op + " ";
    switch (info.kind) {
      case OpKind::kLoad:
        text += j.at("dst").get<std::string>() + ", [" + addr("addr") + "]";
        if (j.contains("stride")) text += ", " + std::to_string(j.at("stride").get<std::uint32_t>());
        break;
      case OpKind::kStore:
        text += "[" + addr("addr") + "], " + std::to_string(j.value("stride", std::uint32_t{64})) + ", " +
                j.at("src").get<std::string>();
        break;
      case OpKind::kCompute:
        text += j.at("dst").get<std::string>() + ", " + j.at("src1").get<std::string>() + ", " +
                j.at("src2").get<std::string>();
        if (j.contains("meta")) text += ", " + j.at("meta").get<std::string>();
        if (j.contains("row_meta_addr")) text += ", [" + addr("row_meta_addr") + "]";
        break;
    }
    return assemble(text).instructions.at(0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad instruction object: ") + e.what());
  }
}

inline Json to_json(const Program& p) {
  Json arr = Json::array();
  for (const auto& inst : p.instructions) arr.push_back(to_json(inst));
  return Json{{"instructions", arr}};
}

inline Program program_from_json(const Json& j) {
  Program p;
  if (!j.contains("instructions") || !j["instructions"].is_array()) {
    throw ParseError("program JSON needs an 'instructions' array");
  }
  std::size_t i = 0;
  for (const auto& item : j["instructions"]) {
    try {
      p.push(instruction_from_json(item), i + 1);
    } catch (const Error& e) {
      throw ParseError("instruction " + std::to_string(i) + ": " + e.what());
    }
    ++i;
  }
  return p;
}

inline Json to_json(const RetireRecord& r) {
  Json j = to_json(r.inst);
  Json out;
  out["index"] = r.index;
  out["opcode"] = j["op"];
  j.erase("op");
  out["operands"] = j;
  if (opcode_info(r.inst.opcode).kind != OpKind::kCompute) out["addr"] = r.inst.addr;
  out["useful_macs"] = r.useful_macs;
  return out;
}

inline Json to_json(const TraceRecord& r) {
  Json j;
  j["index"] = r.index;
  j["opcode"] = std::string(mnemonic(r.opcode));
  j["issue"] = r.issue;
  j["complete"] = r.complete;
  if (r.is_compute()) {
    Json st;
    for (std::size_t k = 0; k < kStageCount; ++k) {
      st[std::string(kStageNames[k])] = Json::array({r.stages[k].start, r.stages[k].end});
    }
    j["stages"] = st;
    j["writeback"] = Json::array({r.writeback.start, r.writeback.end});
    j["stall"] = r.stall;
    j["useful_macs"] = r.useful_macs;
  }
  return j;
}

inline Json to_json(const SimulationSummary& s) {
  Json j;
  j["record"] = "summary";
  j["engine"] = s.engine;
  j["output_forwarding"] = s.output_forwarding;
  j["clock_ghz"] = s.clock_ghz;
  j["instructions"] = s.instructions;
  j["compute_ops"] = s.compute_ops;
  j["total_cycles"] = s.total_cycles;
  j["useful_macs"] = s.useful_macs;
  j["stall_cycles"] = s.stall_cycles;
  j["mac_utilization"] = s.mac_utilization;
  j["seconds"] = s.seconds;
  j["issue_interval"] = s.dominant_interval();
  Json hist = Json::object();
  for (const auto& [gap, n] : s.issue_intervals) hist[std::to_string(gap)] = n;
  j["issue_intervals"] = hist;
  j["opcode_counts"] = s.opcode_counts;
  return j;
}

inline Json to_json(const PredictedCounts& c) {
  return Json{{"tile_loads", c.tile_loads},
              {"metadata_loads", c.metadata_loads},
              {"stores", c.stores},
              {"computes", c.computes}};
}

inline Json to_json(const KernelManifest& m) {
  Json j;
  j["variant"] = to_string(m.variant);
  j["d_m"] = m.spec.d_m;
  j["d_n"] = m.spec.d_n;
  j["d_k"] = m.spec.d_k;
  j["sparsity"] = to_string(m.spec.sparsity);
  Json regions = Json::array();
  for (const auto& r : m.regions) {
    regions.push_back(Json{{"name", r.name}, {"addr", r.addr}, {"bytes", r.bytes}, {"row_stride", r.row_stride},
                           {"layout", r.layout}});
  }
  j["regions"] = regions;
  return j;
}

inline Json to_json(const TraceStats& s) {
  Json j;
  j["opcode_counts"] = s.opcode_counts;
  j["counts"] = to_json(s.counts);
  if (s.predicted) {
    j["predicted"] = to_json(*s.predicted);
    j["delta"] = Json{{"tile_loads", s.delta->tile_loads},
                      {"metadata_loads", s.delta->metadata_loads},
                      {"stores", s.delta->stores},
                      {"computes", s.delta->computes}};
  }
  j["cycles"] = s.cycles;
  j["useful_macs"] = s.useful_macs;
  j["stall_cycles"] = s.stall_cycles;
  j["utilization"] = s.utilization;
  Json hist = Json::object();
  for (const auto& [gap, n] : s.issue_intervals) hist[std::to_string(gap)] = n;
  j["issue_intervals"] = hist;
  return j;
}

inline Json to_json(const SpeedupReport& r) {
  Json j;
  j["baseline"] = r.baseline;
  Json rows = Json::array();
  for (const auto& x : r.rows) {
    rows.push_back(Json{{"workload", x.workload},
                        {"engine", x.engine},
                        {"sparsity", to_string(x.sparsity)},
                        {"d_m", x.gemm.d_m},
                        {"d_n", x.gemm.d_n},
                        {"d_k", x.gemm.d_k},
                        {"compute_ops", x.compute_ops},
                        {"cycles", x.cycles},
                        {"baseline_cycles", x.baseline_cycles},
                        {"speedup", x.speedup}});
  }
  j["rows"] = rows;
  Json agg = Json::array();
  for (const auto& a : r.aggregate) {
    agg.push_back(Json{{"engine", a.engine},
                       {"sparsity", to_string(a.sparsity)},
                       {"cycles", a.cycles},
                       {"baseline_cycles", a.baseline_cycles},
                       {"speedup", a.speedup}});
  }
  j["aggregate"] = agg;
  return j;
}

inline Json to_json(const UnstructuredSummary& s) {
  Json j;
  Json rows = Json::array();
  for (const auto& e : s.per_workload) {
    rows.push_back(Json{{"workload", e.workload},
                        {"density", e.density},
                        {"spmm_r_ops", e.spmm_r_ops},
                        {"sparse_cycles", e.sparse_cycles()},
                        {"dense_cycles", e.dense_cycles()},
                        {"speedup", e.speedup}});
  }
  j["rows"] = rows;
  j["sparse_cycles"] = s.sparse_cycles;
  j["dense_cycles"] = s.dense_cycles;
  j["speedup"] = s.speedup;
  return j;
}

}  // namespace vegeta
