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

#include "vegeta/analysis.hpp"
#include "vegeta/assembler.hpp"
#include "vegeta/bf16.hpp"
#include "vegeta/common.hpp"
#include "vegeta/emulator.hpp"
#include "vegeta/engine_config.hpp"
#include "vegeta/isa.hpp"
#include "vegeta/json_io.hpp"
#include "vegeta/kernel_codegen.hpp"
#include "vegeta/nm_sparsity.hpp"
#include "vegeta/pipeline.hpp"
#include "vegeta/tile_file.hpp"
