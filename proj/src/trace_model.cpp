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

#include "cachescope/trace_model.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "cachescope/errors.hpp"

namespace cachescope {

namespace {
constexpr std::string_view kEvictionsInfix = "_evictions_";
}

TraceKey::TraceKey(std::string workload, std::string policy)
    : workload_(std::move(workload)), policy_(std::move(policy)) {
  if (!valid_identifier(workload_) || !valid_identifier(policy_)) {
    throw Error(ErrorCode::InvalidKey,
                fmt::format("invalid trace key parts '{}' / '{}': expected [a-z0-9_]+",
                            workload_, policy_));
  }
  if (workload_.find("_evictions") != std::string::npos) {
    throw Error(ErrorCode::InvalidKey,
                fmt::format("workload '{}' may not contain '_evictions'", workload_));
  }
}

bool TraceKey::valid_identifier(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

TraceKey TraceKey::parse(std::string_view canonical_id) {
  auto pos = canonical_id.find(kEvictionsInfix);
  if (pos == std::string_view::npos) {
    throw Error(ErrorCode::InvalidKey,
                fmt::format("'{}' is not of the form <workload>_evictions_<policy>",
                            canonical_id));
  }
  return TraceKey(std::string(canonical_id.substr(0, pos)),
                  std::string(canonical_id.substr(pos + kEvictionsInfix.size())));
}

std::string TraceKey::canonical_id() const {
  return workload_ + std::string(kEvictionsInfix) + policy_;
}

std::string_view to_string(Outcome outcome) {
  return outcome == Outcome::Hit ? "Cache Hit" : "Cache Miss";
}

std::string_view to_string(MissType type) {
  switch (type) {
    case MissType::None: return "None";
    case MissType::Compulsory: return "Compulsory";
    case MissType::Capacity: return "Capacity";
    case MissType::Conflict: return "Conflict";
  }
  return "None";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  if (text == "Cache Hit") return Outcome::Hit;
  if (text == "Cache Miss") return Outcome::Miss;
  return std::nullopt;
}

std::optional<MissType> parse_miss_type(std::string_view text) {
  for (auto t : {MissType::None, MissType::Compulsory, MissType::Capacity, MissType::Conflict}) {
    if (text == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string render_reuse_distance(const std::optional<std::uint64_t>& distance) {
  if (!distance) return "never needed again";
  return fmt::format("needed again in {} accesses", *distance);
}

std::string render_recency(const std::optional<std::uint64_t>& recency) {
  if (!recency) return "first access to this address";
  return fmt::format("last accessed {} accesses ago", *recency);
}

std::string AccessRecord::accessed_address_recency() const {
  return render_recency(accessed_address_recency_numeric);
}

std::string AccessRecord::accessed_address_reuse_distance() const {
  return render_reuse_distance(accessed_address_reuse_distance_numeric);
}

std::string AccessRecord::evicted_address_reuse_distance() const {
  if (!evicted_address) return "";
  return render_reuse_distance(evicted_address_reuse_distance_numeric);
}

bool QueryFilters::matches(const AccessRecord& r) const {
  auto in = [](const auto& list, auto value) {
    return list.empty() || std::find(list.begin(), list.end(), value) != list.end();
  };
  return in(pcs, r.program_counter) && in(addresses, r.memory_address) &&
         in(set_ids, r.cache_set_id) && (!outcome || *outcome == r.evict);
}

std::string QueryFilters::describe() const {
  std::vector<std::string> parts;
  if (workload) parts.push_back("workload=" + *workload);
  if (policy) parts.push_back("policy=" + *policy);
  for (auto pc : pcs) parts.push_back("program_counter == " + to_hex(pc));
  for (auto a : addresses) parts.push_back("memory_address == " + to_hex(a));
  for (auto s : set_ids) parts.push_back(fmt::format("cache_set_id == {}", s));
  if (outcome) parts.push_back(fmt::format("evict == {}", to_string(*outcome)));
  if (parts.empty()) return "(no filters)";
  return fmt::format("{}", fmt::join(parts, ", "));
}

RecordTable slice(std::span<const AccessRecord> records, const QueryFilters& filters) {
  RecordTable out;
  for (const auto& r : records) {
    if (filters.matches(r)) out.push_back(r);
  }
  return out;
}

void TraceStore::put_bundle(TraceBundle bundle) {
  if (!TraceKey::valid_identifier(bundle.key.workload()) ||
      !TraceKey::valid_identifier(bundle.key.policy())) {
    throw Error(ErrorCode::InvalidKey, "bundle has an empty or invalid key");
  }
  Entry entry;
  for (std::size_t i = 0; i < bundle.records.size(); ++i) {
    const auto& r = bundle.records[i];
    entry.index[{r.program_counter, r.memory_address}].push_back(i);
  }
  auto key = bundle.key;
  entry.bundle = std::move(bundle);
  entries_.insert_or_assign(std::move(key), std::move(entry));
}

bool TraceStore::contains(const TraceKey& key) const { return entries_.count(key) > 0; }

const TraceBundle* TraceStore::find(const TraceKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second.bundle;
}

const TraceBundle* TraceStore::find(std::string_view canonical_id) const {
  try {
    return find(TraceKey::parse(canonical_id));
  } catch (const Error&) {
    return nullptr;
  }
}

const TraceBundle& TraceStore::at(const TraceKey& key) const {
  if (const auto* b = find(key)) return *b;
  throw Error(ErrorCode::BundleNotFound, fmt::format("no trace '{}'", key.canonical_id()));
}

std::vector<TraceKey> TraceStore::keys() const {
  std::vector<TraceKey> out;
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

std::vector<std::string> TraceStore::workloads() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : entries_) out.push_back(k.workload());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> TraceStore::policies() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : entries_) out.push_back(k.policy());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<const TraceBundle*> TraceStore::bundles_for_workload(std::string_view workload) const {
  std::vector<const TraceBundle*> out;
  for (const auto& [k, e] : entries_) {
    if (k.workload() == workload) out.push_back(&e.bundle);
  }
  return out;
}

std::span<const std::size_t> TraceStore::lookup(const TraceKey& key, Address pc,
                                                Address address) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return {};
  auto hit = it->second.index.find({pc, address});
  if (hit == it->second.index.end()) return {};
  return hit->second;
}

bool operator==(const TraceStore& a, const TraceStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  return std::equal(a.entries_.begin(), a.entries_.end(), b.entries_.begin(),
                    [](const auto& x, const auto& y) {
                      return x.first == y.first && x.second.bundle == y.second.bundle;
                    });
}

}  // namespace cachescope
