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

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "vegeta/common.hpp"
#include "vegeta/isa.hpp"

namespace vegeta {

enum class EngineKind { kDense, kSparse };

/// Every tile GEMM/SPMM needs 32 effectual MACs per output element.
inline constexpr unsigned kEffectualMacsPerOutput = 32;
/// Columns of the B tile streamed per instruction.
inline constexpr unsigned kInputTileCols = 16;

/// Stage latencies in cycles. `dr` is the array drain (n_cols) and `rd` the
/// reduction tail (log2 beta) that follows it; the drain latency of a design
/// is dr + rd. The reduction tree is its own pipeline resource.
struct StageLatencies {
  unsigned wl = 0;
  unsigned ff = 0;
  unsigned fs = 0;
  unsigned dr = 0;
  unsigned rd = 0;

  unsigned drain_latency() const { return dr + rd; }
  unsigned issue_interval() const { return std::max({wl, ff, fs, dr, rd}); }
  unsigned latency() const { return wl + ff + fs + dr + rd; }
};

struct EngineConfig {
  std::string name;
  EngineKind kind = EngineKind::kSparse;
  unsigned alpha = 1;
  unsigned beta = 2;
  unsigned total_macs = 512;
  unsigned n_rows = 0;
  unsigned n_cols = 0;
  unsigned reduction_latency = 0;

  unsigned macs_per_pe() const { return alpha * beta; }
  /// Input elements fed to one PE per cycle: beta blocks of 4 on sparse PEs.
  unsigned inputs_per_pe() const { return kind == EngineKind::kSparse ? beta * 4 : beta; }

  StageLatencies stages() const {
    return {n_rows, kInputTileCols, n_rows - 1, n_cols, reduction_latency};
  }

  bool supports(Opcode op) const {
    if (!is_compute(op)) return true;
    return kind == EngineKind::kSparse || op == Opcode::kTileGemm;
  }
};

inline EngineConfig derive_config(EngineKind kind, unsigned alpha, unsigned beta, unsigned total_macs = 512,
                                  std::string name = {}) {
  if (alpha == 0 || beta == 0 || total_macs == 0) throw ConfigError("alpha, beta and total_macs must be positive");
  if (!is_power_of_two(beta)) throw ConfigError("beta=" + std::to_string(beta) + " must be a power of two");
  if (kEffectualMacsPerOutput % beta != 0) {
    throw ConfigError("beta=" + std::to_string(beta) + " does not divide " + std::to_string(kEffectualMacsPerOutput));
  }
  if (kind == EngineKind::kSparse && beta != 2) throw ConfigError("sparse engines need beta = m/2 = 2");
  EngineConfig c;
  c.kind = kind;
  c.alpha = alpha;
  c.beta = beta;
  c.total_macs = total_macs;
  c.n_rows = kEffectualMacsPerOutput / beta;
  const unsigned per_col = c.n_rows * alpha * beta;
  if (total_macs % per_col != 0) {
    throw ConfigError(std::to_string(total_macs) + " MACs do not split into columns of " + std::to_string(per_col));
  }
  c.n_cols = total_macs / per_col;
  c.reduction_latency = log2_exact(beta);
  c.name = name.empty() ? std::string("vegeta-") + (kind == EngineKind::kDense ? "d-" : "s-") +
                              std::to_string(alpha) + "-" + std::to_string(beta)
                        : std::move(name);
  return c;
}

struct PresetSpec {
  std::string_view name;
  EngineKind kind;
  unsigned alpha;
  unsigned beta;
};

inline constexpr std::array<PresetSpec, 8> kPresets = {{
    {"vegeta-d-1-1", EngineKind::kDense, 1, 1},
    {"vegeta-d-1-2", EngineKind::kDense, 1, 2},
    {"vegeta-d-16-1", EngineKind::kDense, 16, 1},
    {"vegeta-s-1-2", EngineKind::kSparse, 1, 2},
    {"vegeta-s-2-2", EngineKind::kSparse, 2, 2},
    {"vegeta-s-4-2", EngineKind::kSparse, 4, 2},
    {"vegeta-s-8-2", EngineKind::kSparse, 8, 2},
    {"vegeta-s-16-2", EngineKind::kSparse, 16, 2},
}};

/// Accepts "vegeta-s-16-2", "VEGETA-S-16-2" or the short "s-16-2".
inline EngineConfig preset(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (key.rfind("vegeta-", 0) != 0) key = "vegeta-" + key;
  for (const auto& p : kPresets) {
    if (p.name == key) return derive_config(p.kind, p.alpha, p.beta, 512, std::string(p.name));
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

/// Knobs that affect timing but not the engine geometry.
struct SimOptions {
  bool output_forwarding = false;
  double clock_ghz = 0.5;        // labels reports only
  unsigned load_latency = 0;     // fixed register-fill latency of loads/stores
};

struct EngineSetup {
  EngineConfig config;
  SimOptions options;
};

/// Parses a config file: either a bare preset name, or `key=value` lines
/// with keys preset, kind, alpha, beta, total_macs, of, clock_ghz,
/// load_latency. `#` starts a comment.
inline EngineSetup parse_engine_config(std::string_view text, const std::string& origin = "config") {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::string preset_name;
  std::string kind = "sparse";
  unsigned alpha = 1, beta = 2, total = 512;
  bool explicit_geometry = false;
  SimOptions opts;
  auto fail = [&](const std::string& msg) -> void {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
  };
  auto to_unsigned = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      const auto x = std::stoul(v, &used, 0);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return static_cast<unsigned>(x);
    } catch (const std::exception&) {
      fail("expected a non-negative integer, got '" + v + "'");
    }
    return 0u;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      preset_name = line;
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "preset") {
      preset_name = val;
    } else if (key == "kind") {
      if (val != "dense" && val != "sparse") fail("kind must be 'dense' or 'sparse'");
      kind = val;
      explicit_geometry = true;
    } else if (key == "alpha") {
      alpha = to_unsigned(val);
      explicit_geometry = true;
    } else if (key == "beta") {
      beta = to_unsigned(val);
      explicit_geometry = true;
    } else if (key == "total_macs") {
      total = to_unsigned(val);
      explicit_geometry = true;
    } else if (key == "of") {
      if (val != "0" && val != "1" && val != "true" && val != "false") fail("of must be 0/1/true/false");
      opts.output_forwarding = val == "1" || val == "true";
    } else if (key == "clock_ghz") {
      try {
        opts.clock_ghz = std::stod(val);
      } catch (const std::exception&) {
        fail("bad clock_ghz '" + val + "'");
      }
      if (!(opts.clock_ghz > 0)) fail("clock_ghz must be positive");
    } else if (key == "load_latency") {
      opts.load_latency = to_unsigned(val);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!preset_name.empty() && explicit_geometry) {
    throw ConfigError(origin + ": give either a preset or kind/alpha/beta/total_macs, not both");
  }
  EngineSetup setup;
  setup.options = opts;
  setup.config = preset_name.empty()
                     ? derive_config(kind == "dense" ? EngineKind::kDense : EngineKind::kSparse, alpha, beta, total)
                     : preset(preset_name);
  return setup;
}

inline EngineSetup load_engine_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_engine_config(ss.str(), path);
}

}  // namespace vegeta
