/*
 * Copyright 2026 The cachescope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cachescope/ingest.hpp"
#include "cachescope/simulator.hpp"

namespace cachescope::workloads {

/// A generated access stream plus the symbol sidecar describing its PCs.
struct SyntheticTrace {
  std::string name;
  std::string description;
  std::vector<Access> accesses;
  SymbolMap symbols;
};

// All generators are deterministic in (length, capacity_lines, seed).
// `capacity_lines` is the cache size the stream is shaped against.

/// Array sweep that never reuses, a small hot table, and a repeated scan
/// slightly larger than the cache.
SyntheticTrace stream(std::size_t length, std::uint64_t capacity_lines, std::uint64_t seed);

/// Pointer chase over a permutation twice the cache size dominated by one
/// load PC, plus loop-local and skewed table accesses.
SyntheticTrace chase(std::size_t length, std::uint64_t capacity_lines, std::uint64_t seed);

/// A reuse PC cycling over a working set that fits in the cache interleaved
/// with a streaming PC that never reuses.
SyntheticTrace mixed(std::size_t length, std::uint64_t capacity_lines, std::uint64_t seed);

/// Looks a generator up by name ("stream", "chase", "mixed"). Throws Error(ConfigError).
SyntheticTrace generate(std::string_view name, std::size_t length, std::uint64_t capacity_lines,
                        std::uint64_t seed);

}  // namespace cachescope::workloads
