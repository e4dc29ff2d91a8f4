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
#include <filesystem>
#include <string>
#include <vector>

#include "cachescope/bench.hpp"
#include "cachescope/trace_model.hpp"
#include "cachescope/workloads.hpp"

namespace cachescope::fixtures {

struct FixtureConfig {
  std::size_t length = 4000;
  std::uint32_t num_sets = 64;
  std::uint32_t ways = 4;
  std::uint64_t seed = 1;
  std::vector<std::string> workloads{"chase", "mixed", "stream"};
  std::vector<std::string> policies{"belady", "lru", "random", "scored_stub"};
};

struct FixtureSet {
  FixtureConfig config;
  std::vector<workloads::SyntheticTrace> traces;
  TraceStore store;
  std::vector<BenchQuestion> questions;
};

/// Every workload under every policy, symbol-enriched.
TraceStore build_store(const FixtureConfig& config, std::vector<workloads::SyntheticTrace>* traces = nullptr);

/// The benchmark suite, with expected answers computed from `store`:
/// 30 HitMiss, 10 MissRate, 15 PolicyComparison, 5 Count, 10 Arithmetic,
/// 5 Trick and five questions in each ARA category.
std::vector<BenchQuestion> generate_questions(const TraceStore& store, const FixtureConfig& config);

FixtureSet build(const FixtureConfig& config = {});

/// Writes fixture.json, questions.jsonl, traces/<w>.trace and
/// symbols/<w>.sym under `dir`; the store goes to `store_dir` when given.
void write(const FixtureSet& set, const std::filesystem::path& dir,
           const std::optional<std::filesystem::path>& store_dir = std::nullopt);

std::string config_to_json(const FixtureConfig& config);
/// Throws Error(ConfigError) on unknown fields or bad values.
FixtureConfig config_from_json(std::string_view text);

}  // namespace cachescope::fixtures
