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
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cachescope/hex.hpp"

namespace cachescope {

/// Identifies one simulated trace: `<workload>_evictions_<policy>`.
/// Both parts are non-empty `[a-z0-9_]` identifiers; the workload may not
/// contain `_evictions` so the canonical id splits unambiguously.
class TraceKey {
 public:
  TraceKey() = default;
  /// Throws Error(InvalidKey).
  TraceKey(std::string workload, std::string policy);

  static TraceKey parse(std::string_view canonical_id);
  static bool valid_identifier(std::string_view name);

  const std::string& workload() const { return workload_; }
  const std::string& policy() const { return policy_; }
  std::string canonical_id() const;

  friend bool operator==(const TraceKey&, const TraceKey&) = default;
  friend auto operator<=>(const TraceKey&, const TraceKey&) = default;

 private:
  std::string workload_;
  std::string policy_;
};

enum class Outcome { Hit, Miss };
enum class MissType { None, Compulsory, Capacity, Conflict };

std::string_view to_string(Outcome outcome);  // "Cache Hit" / "Cache Miss"
std::string_view to_string(MissType type);
std::optional<Outcome> parse_outcome(std::string_view text);
std::optional<MissType> parse_miss_type(std::string_view text);

/// (pc, address) pair of a resident line or a history entry.
struct LineRef {
  Address pc = 0;
  Address address = 0;
  friend bool operator==(const LineRef&, const LineRef&) = default;
};

struct LineScore {
  Address address = 0;
  std::int64_t score = 0;
  friend bool operator==(const LineScore&, const LineScore&) = default;
};

/// One annotated LLC access. Distances are index deltas in the global access
/// stream; absent optionals mean "first touch" / "never reused".
struct AccessRecord {
  Address program_counter = 0;
  Address memory_address = 0;
  std::uint32_t cache_set_id = 0;
  Outcome evict = Outcome::Hit;
  MissType miss_type = MissType::None;
  std::optional<Address> evicted_address;
  std::optional<std::uint64_t> accessed_address_recency_numeric;
  std::optional<std::uint64_t> accessed_address_reuse_distance_numeric;
  std::optional<std::uint64_t> evicted_address_reuse_distance_numeric;
  std::string function_name;
  std::string function_code;
  std::string assembly_code;
  std::vector<LineRef> current_cache_lines;
  std::vector<LineRef> recent_access_history;
  std::vector<LineScore> cache_line_eviction_scores;
  std::vector<Address> current_cache_line_addresses;
  /// Columns this build does not know, kept as raw JSON text.
  std::map<std::string, std::string> extensions;

  bool is_miss() const { return evict == Outcome::Miss; }

  // Textual views rendered from the numeric fields.
  std::string accessed_address_recency() const;
  std::string accessed_address_reuse_distance() const;
  std::string evicted_address_reuse_distance() const;

  friend bool operator==(const AccessRecord&, const AccessRecord&) = default;
};

std::string render_reuse_distance(const std::optional<std::uint64_t>& distance);
std::string render_recency(const std::optional<std::uint64_t>& recency);

using RecordTable = std::vector<AccessRecord>;

struct TraceBundle {
  TraceKey key;
  RecordTable records;
  std::string metadata;
  std::string description;

  friend bool operator==(const TraceBundle&, const TraceBundle&) = default;
};

/// Conjunction across fields, disjunction within a list field. Empty lists
/// and absent optionals do not constrain.
struct QueryFilters {
  std::optional<std::string> workload;
  std::optional<std::string> policy;
  std::vector<Address> pcs;
  std::vector<Address> addresses;
  std::vector<std::uint32_t> set_ids;
  std::optional<Outcome> outcome;

  bool has_record_filters() const {
    return !pcs.empty() || !addresses.empty() || !set_ids.empty() || outcome.has_value();
  }
  bool anchored() const { return workload || policy || has_record_filters(); }
  bool matches(const AccessRecord& record) const;
  std::string describe() const;

  friend bool operator==(const QueryFilters&, const QueryFilters&) = default;
};

RecordTable slice(std::span<const AccessRecord> records, const QueryFilters& filters);

/// Keyed collection of bundles with a (pc, address) index per bundle.
class TraceStore {
 public:
  /// Replaces any bundle stored under the same key.
  void put_bundle(TraceBundle bundle);

  bool contains(const TraceKey& key) const;
  const TraceBundle* find(const TraceKey& key) const;
  const TraceBundle* find(std::string_view canonical_id) const;
  /// Throws Error(BundleNotFound).
  const TraceBundle& at(const TraceKey& key) const;

  std::vector<TraceKey> keys() const;
  std::vector<std::string> workloads() const;
  std::vector<std::string> policies() const;
  std::vector<const TraceBundle*> bundles_for_workload(std::string_view workload) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Indices of the records with exactly this (pc, address).
  std::span<const std::size_t> lookup(const TraceKey& key, Address pc, Address address) const;

  friend bool operator==(const TraceStore& a, const TraceStore& b);

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<Address, Address>& p) const noexcept {
      return std::hash<Address>{}(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
    }
  };
  struct Entry {
    TraceBundle bundle;
    std::unordered_map<std::pair<Address, Address>, std::vector<std::size_t>, PairHash> index;
  };
  std::map<TraceKey, Entry> entries_;
};

// Persistence: one directory per bundle holding records.jsonl, metadata.txt
// and description.txt. Errors: IoError, FormatError.
void save_bundle(const TraceBundle& bundle, const std::filesystem::path& store_dir);
TraceBundle load_bundle(const std::filesystem::path& bundle_dir);
void save_store(const TraceStore& store, const std::filesystem::path& store_dir);
TraceStore load_store(const std::filesystem::path& store_dir);

void write_records_jsonl(std::span<const AccessRecord> records, std::ostream& out);
/// `source` names the stream in error messages.
RecordTable read_records_jsonl(std::istream& in, std::string_view source = "<stream>");
std::string record_to_json(const AccessRecord& record);

void export_csv(const TraceBundle& bundle, std::ostream& out);

}  // namespace cachescope
