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

#include <bit>
#include <cstdint>

namespace vegeta {

enum class RoundMode { kNearestEven, kTruncate };

/// bfloat16 stored as its raw 16-bit pattern.
struct Bf16 {
  std::uint16_t bits = 0;

  constexpr float to_float() const {
    return std::bit_cast<float>(static_cast<std::uint32_t>(bits) << 16);
  }

  friend constexpr bool operator==(Bf16, Bf16) = default;
};

/// Narrows an FP32 value. NaNs stay NaN (quieted) under both modes.
constexpr Bf16 bf16_from_fp32(float x, RoundMode mode = RoundMode::kNearestEven) {
  const std::uint32_t u = std::bit_cast<std::uint32_t>(x);
  if ((u & 0x7F800000u) == 0x7F800000u && (u & 0x007FFFFFu) != 0) {
    return Bf16{static_cast<std::uint16_t>((u >> 16) | 0x0040u)};
  }
  if (mode == RoundMode::kTruncate) {
    return Bf16{static_cast<std::uint16_t>(u >> 16)};
  }
  const std::uint32_t lsb = (u >> 16) & 1u;
  return Bf16{static_cast<std::uint16_t>((u + 0x7FFFu + lsb) >> 16)};
}

constexpr float bf16_to_fp32(Bf16 v) { return v.to_float(); }

}  // namespace vegeta
