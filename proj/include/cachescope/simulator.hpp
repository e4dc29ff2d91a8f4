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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cachescope/trace_model.hpp"

namespace cachescope {

/// One input access: the issuing instruction and the data address.
struct Access {
  Address pc = 0;
  Address address = 0;
  friend bool operator==(const Access&, const Access&) = default;
};

struct CacheConfig {
  std::uint32_t num_sets = 2048;
  std::uint32_t ways = 16;
  std::uint32_t line_size_bytes = 64;
  std::uint32_t history_depth = 8;

  /// Throws Error(ConfigError).
  void validate() const;
  std::uint64_t capacity_lines() const {
    return static_cast<std::uint64_t>(num_sets) * ways;
  }
};

namespace policy {
struct Lru {};
struct Belady {};
struct Random {
  std::uint64_t seed = 0;
};
struct BypassLru {
  std::set<Address> bypass_pcs;
};
struct ScoredStub {
  std::uint64_t seed = 0x5eed;
};
}  // namespace policy

using PolicySpec =
    std::variant<policy::Lru, policy::Belady, policy::Random, policy::BypassLru, policy::ScoredStub>;

/// Lowercase identifier used in trace keys: lru, belady, random, bypass_lru, scored_stub.
std::string policy_name(const PolicySpec& spec);
std::string policy_description(std::string_view policy_name);
/// Accepts the names above. Throws Error(ConfigError).
PolicySpec parse_policy(std::string_view name, std::uint64_t seed = 0,
                        std::set<Address> bypass_pcs = {});

/// Bits [log2(line), log2(line) + log2(sets)) of the address.
std::uint32_t set_index(Address address, const CacheConfig& config);

/// Entry i is j - i for the next j > i touching the same address.
std::vector<std::optional<std::uint64_t>> next_use_table(std::span<const Address> addresses);

/// Entry i is the number of accesses strictly between i and the previous
/// touch of the same address; absent on first touch.
std::vector<std::optional<std::uint64_t>> recency_table(std::span<const Address> addresses);

bool is_wrong_eviction(std::optional<std::uint64_t> evicted_forward_distance,
                       std::optional<std::uint64_t> inserted_forward_distance);

struct TraceSummary {
  std::uint64_t total_accesses = 0;
  std::uint64_t total_misses = 0;
  double miss_rate = 0;
  double pct_compulsory = 0;
  double pct_capacity = 0;
  double pct_conflict = 0;
  std::uint64_t total_evictions = 0;
  std::uint64_t wrong_evictions = 0;
  double wrong_eviction_pct = 0;
  /// Pearson r over (recency, is_miss) for non-first-touch records; 0 when
  /// either side has zero variance or fewer than two samples.
  double recency_miss_correlation = 0;
};

/// Throws Error(EmptyTrace).
TraceSummary summarize(std::span<const AccessRecord> records);

/// `fold_compulsory` reports compulsory misses inside the capacity bucket
/// and omits the compulsory term.
std::string render_metadata(const TraceSummary& summary, bool fold_compulsory = false);

/// Inverse of render_metadata (both variants). Throws Error(FormatError).
TraceSummary parse_metadata(std::string_view metadata);

/// True when the metadata counters equal a recomputation over the records
/// and the percentages agree to two decimals.
bool metadata_consistent(const TraceBundle& bundle);

struct SimulateOptions {
  std::string workload = "trace";
  std::string workload_description;
  bool fold_compulsory = false;
};

/// Throws Error(ConfigError) on invalid config or policy parameters.
TraceBundle simulate(std::span<const Access> trace, const CacheConfig& config,
                     const PolicySpec& policy, const SimulateOptions& options = {});

}  // namespace cachescope
