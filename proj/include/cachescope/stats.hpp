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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cachescope/trace_model.hpp"

namespace cachescope {

/// Per-PC statistics over a record slice. Reuse distances are forward
/// distances of the accessed address; `std_reuse_distance` is the sample
/// (n-1) deviation and needs at least two reused accesses.
struct PcStats {
  Address pc = 0;
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  double miss_rate = 0;
  std::uint64_t reused_accesses = 0;
  std::optional<double> mean_reuse_distance;
  std::optional<double> std_reuse_distance;
  std::optional<double> mean_evicted_reuse_distance;
  std::uint64_t eviction_count = 0;
  std::uint64_t wrong_evictions = 0;
  double wrong_eviction_pct = 0;

  double hit_rate() const { return accesses == 0 ? 0.0 : 100.0 - miss_rate; }
};

/// Throws Error(PcNotFound) when no record carries `pc`.
PcStats pc_stats(std::span<const AccessRecord> records, Address pc);
/// One entry per distinct PC, ascending by PC.
std::vector<PcStats> all_pc_stats(std::span<const AccessRecord> records);

enum class Metric { MissRate, HitRate, Misses, Hits, WrongEvictionPct };
std::string_view to_string(Metric metric);
std::optional<Metric> parse_metric(std::string_view name);
bool lower_is_better(Metric metric);

struct PolicyRank {
  std::string policy;
  double value = 0;
};

/// Best first; ties broken by policy name. With a PC target, bundles that
/// never see the PC are left out. Throws WorkloadNotFound, or PcNotFound when
/// no bundle of the workload sees the PC.
std::vector<PolicyRank> compare_policies(const TraceStore& store, std::string_view workload,
                                         std::optional<Address> pc, Metric metric);

struct SetStats {
  std::uint32_t set_id = 0;
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  double hit_rate = 0;
};

struct SetHotness {
  std::vector<SetStats> hot;    // highest hit rate first
  std::vector<SetStats> cold;   // lowest hit rate first
  std::vector<SetStats> table;  // every accessed set, ascending id
};

inline constexpr std::uint64_t kDefaultMinSetAccesses = 16;

/// Only sets with at least `min_accesses` accesses are ranked; ties go to
/// the lower set id. Throws NotEnoughSets when fewer than k sets qualify.
SetHotness set_hotness(std::span<const AccessRecord> records, std::size_t k,
                       std::uint64_t min_accesses = kDefaultMinSetAccesses);

struct ReuseVarianceGroups {
  std::vector<Address> low;
  std::vector<Address> medium;
  std::vector<Address> high;
  std::vector<Address> unclassified;  // fewer than two reused accesses
  double low_cutoff = 0;              // 1/3 quantile of the per-PC std values
  double high_cutoff = 0;             // 2/3 quantile
};

/// Tertile bucketing of per-PC reuse-distance standard deviation
/// (linear-interpolation quantiles). std <= low_cutoff is low, <= high_cutoff
/// is medium, the rest high; identical values collapse into low.
ReuseVarianceGroups group_pcs_by_reuse_variance(std::span<const AccessRecord> records);

struct BypassCandidate {
  PcStats stats;
  std::string reason;
};

/// Ranked by hit rate ascending, then mean reuse distance descending (never
/// reused counts as infinite), then PC.
std::vector<BypassCandidate> bypass_candidates(std::span<const AccessRecord> records,
                                               std::size_t max_candidates);

struct TopMissPc {
  Address pc = 0;
  std::uint64_t miss_count = 0;
  double miss_rate = 0;
};

/// Most misses, ties to the lower PC. Throws Error(NoMisses).
TopMissPc top_miss_pc(std::span<const AccessRecord> records);

template <typename Predicate>
std::size_t count_events(std::span<const AccessRecord> records, Predicate&& predicate) {
  std::size_t n = 0;
  for (const auto& r : records)
    if (predicate(r)) ++n;
  return n;
}

}  // namespace cachescope
