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

#include "cachescope/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <list>
#include <random>
#include <regex>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "cachescope/errors.hpp"

namespace cachescope {

void CacheConfig::validate() const {
  if (num_sets == 0 || !std::has_single_bit(num_sets)) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("num_sets must be a power of two >= 1, got {}", num_sets));
  }
  if (ways == 0) throw Error(ErrorCode::ConfigError, "ways must be >= 1");
  if (line_size_bytes == 0 || !std::has_single_bit(line_size_bytes)) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("line size must be a power of two, got {}", line_size_bytes));
  }
}

std::string policy_name(const PolicySpec& spec) {
  struct Visitor {
    std::string operator()(const policy::Lru&) const { return "lru"; }
    std::string operator()(const policy::Belady&) const { return "belady"; }
    std::string operator()(const policy::Random&) const { return "random"; }
    std::string operator()(const policy::BypassLru&) const { return "bypass_lru"; }
    std::string operator()(const policy::ScoredStub&) const { return "scored_stub"; }
  };
  return std::visit(Visitor{}, spec);
}

std::string policy_description(std::string_view name) {
  if (name == "lru")
    return "LRU (Least Recently Used): on a miss in a full set, evicts the line whose "
           "most recent access is oldest.";
  if (name == "belady")
    return "Belady's optimal (MIN): offline policy that evicts the line whose next use lies "
           "farthest in the future; an upper bound on achievable hits.";
  if (name == "random")
    return "Random: evicts a pseudo-randomly chosen line of the set (seeded, reproducible).";
  if (name == "bypass_lru")
    return "Bypass-LRU: LRU replacement that skips cache insertion for accesses issued by a "
           "configured set of bypass PCs.";
  if (name == "scored_stub")
    return "Scored stub: gives every line a seeded pseudo-random score on insertion and on "
           "each hit, and evicts the highest score.";
  return fmt::format("Replacement policy {}.", name);
}

PolicySpec parse_policy(std::string_view name, std::uint64_t seed, std::set<Address> bypass_pcs) {
  if (name == "lru") return policy::Lru{};
  if (name == "belady") return policy::Belady{};
  if (name == "random") return policy::Random{seed};
  if (name == "scored_stub") return policy::ScoredStub{seed == 0 ? 0x5eed : seed};
  if (name == "bypass_lru") {
    if (bypass_pcs.empty())
      throw Error(ErrorCode::ConfigError, "bypass_lru needs at least one bypass PC");
    return policy::BypassLru{std::move(bypass_pcs)};
  }
  throw Error(ErrorCode::ConfigError, fmt::format("unknown policy '{}'", name));
}

std::uint32_t set_index(Address address, const CacheConfig& config) {
  auto offset_bits = std::countr_zero(config.line_size_bytes);
  return static_cast<std::uint32_t>((address >> offset_bits) & (config.num_sets - 1));
}

std::vector<std::optional<std::uint64_t>> next_use_table(std::span<const Address> addresses) {
  std::vector<std::optional<std::uint64_t>> out(addresses.size());
  std::unordered_map<Address, std::size_t> next_seen;
  for (std::size_t i = addresses.size(); i-- > 0;) {
    auto it = next_seen.find(addresses[i]);
    if (it != next_seen.end()) {
      out[i] = it->second - i;
      it->second = i;
    } else {
      next_seen.emplace(addresses[i], i);
    }
  }
  return out;
}

std::vector<std::optional<std::uint64_t>> recency_table(std::span<const Address> addresses) {
  std::vector<std::optional<std::uint64_t>> out(addresses.size());
  std::unordered_map<Address, std::size_t> last_seen;
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    auto [it, inserted] = last_seen.try_emplace(addresses[i], i);
    if (!inserted) {
      out[i] = i - it->second - 1;
      it->second = i;
    }
  }
  return out;
}

bool is_wrong_eviction(std::optional<std::uint64_t> evicted_fd,
                       std::optional<std::uint64_t> inserted_fd) {
  return evicted_fd.has_value() && (!inserted_fd.has_value() || *evicted_fd < *inserted_fd);
}

namespace {

double percent(std::uint64_t part, std::uint64_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TraceSummary summarize(std::span<const AccessRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyTrace, "cannot summarize an empty trace");
  TraceSummary s;
  std::uint64_t compulsory = 0, capacity = 0, conflict = 0;
  std::vector<double> recency, missed;
  for (const auto& r : records) {
    ++s.total_accesses;
    if (r.is_miss()) ++s.total_misses;
    switch (r.miss_type) {
      case MissType::Compulsory: ++compulsory; break;
      case MissType::Capacity: ++capacity; break;
      case MissType::Conflict: ++conflict; break;
      case MissType::None: break;
    }
    if (r.evicted_address) {
      ++s.total_evictions;
      if (is_wrong_eviction(r.evicted_address_reuse_distance_numeric,
                            r.accessed_address_reuse_distance_numeric))
        ++s.wrong_evictions;
    }
    if (r.accessed_address_recency_numeric) {
      recency.push_back(static_cast<double>(*r.accessed_address_recency_numeric));
      missed.push_back(r.is_miss() ? 1.0 : 0.0);
    }
  }
  s.miss_rate = percent(s.total_misses, s.total_accesses);
  s.pct_compulsory = percent(compulsory, s.total_misses);
  s.pct_capacity = percent(capacity, s.total_misses);
  s.pct_conflict = percent(conflict, s.total_misses);
  s.wrong_eviction_pct = percent(s.wrong_evictions, s.total_evictions);
  s.recency_miss_correlation = pearson(recency, missed);
  return s;
}

std::string render_metadata(const TraceSummary& s, bool fold_compulsory) {
  std::string buckets;
  if (fold_compulsory) {
    buckets = fmt::format("{:.2f}% capacity misses, {:.2f}% conflict misses",
                          s.pct_compulsory + s.pct_capacity, s.pct_conflict);
  } else {
    buckets = fmt::format("{:.2f}% compulsory misses, {:.2f}% capacity misses, "
                          "{:.2f}% conflict misses",
                          s.pct_compulsory, s.pct_capacity, s.pct_conflict);
  }
  return fmt::format(
      "Cache Performance Summary: {} total accesses, {} total misses, {:.2f}% miss rate, "
      "{}, {} total evictions, {} ({:.2f}%) wrong evictions where evicted line has lower "
      "reuse distance. The correlation between accessed address recency and cache misses "
      "is {:.2f}.",
      s.total_accesses, s.total_misses, s.miss_rate, buckets, s.total_evictions,
      s.wrong_evictions, s.wrong_eviction_pct, s.recency_miss_correlation);
}

TraceSummary parse_metadata(std::string_view metadata) {
  static const std::regex pattern(
      R"(Cache Performance Summary: (\d+) total accesses, (\d+) total misses, )"
      R"(([0-9.]+)% miss rate, (?:([0-9.]+)% compulsory misses, )?([0-9.]+)% capacity misses, )"
      R"(([0-9.]+)% conflict misses, (\d+) total evictions, (\d+) \(([0-9.]+)%\) wrong )"
      R"(evictions where evicted line has lower reuse distance\. The correlation between )"
      R"(accessed address recency and cache misses is (-?[0-9.]+)\.)");
  std::cmatch m;
  if (!std::regex_match(metadata.data(), metadata.data() + metadata.size(), m, pattern)) {
    throw Error(ErrorCode::FormatError, "metadata string does not match the summary template");
  }
  TraceSummary s;
  s.total_accesses = std::stoull(m[1].str());
  s.total_misses = std::stoull(m[2].str());
  s.miss_rate = std::stod(m[3].str());
  s.pct_compulsory = m[4].matched ? std::stod(m[4].str()) : 0.0;
  s.pct_capacity = std::stod(m[5].str());
  s.pct_conflict = std::stod(m[6].str());
  s.total_evictions = std::stoull(m[7].str());
  s.wrong_evictions = std::stoull(m[8].str());
  s.wrong_eviction_pct = std::stod(m[9].str());
  s.recency_miss_correlation = std::stod(m[10].str());
  return s;
}

bool metadata_consistent(const TraceBundle& bundle) {
  if (bundle.records.empty()) return false;
  const bool folded = bundle.metadata.find("compulsory misses") == std::string::npos;
  try {
    parse_metadata(bundle.metadata);
  } catch (const Error&) {
    return false;
  }
  return render_metadata(summarize(bundle.records), folded) == bundle.metadata;
}

namespace {

struct Line {
  bool valid = false;
  Address pc = 0;
  Address address = 0;
  std::uint64_t last_touch = 0;
  std::uint64_t next_use = 0;  // absolute index; trace length when never reused
  std::int64_t stub_score = 0;
};

// Fully associative LRU of the same total capacity, used to split
// capacity from conflict misses.
class ShadowLru {
 public:
  explicit ShadowLru(std::uint64_t capacity) : capacity_(capacity) {}

  /// Returns whether the address was resident, then touches it.
  bool access(Address address) {
    auto it = where_.find(address);
    if (it != where_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return true;
    }
    order_.push_front(address);
    where_[address] = order_.begin();
    if (order_.size() > capacity_) {
      where_.erase(order_.back());
      order_.pop_back();
    }
    return false;
  }

 private:
  std::uint64_t capacity_;
  std::list<Address> order_;
  std::unordered_map<Address, std::list<Address>::iterator> where_;
};

class ReplacementPolicy {
 public:
  virtual ~ReplacementPolicy() = default;
  virtual bool bypass(Address /*pc*/) const { return false; }
  /// Scores for the valid lines of a set, in way order, at access time.
  virtual std::vector<std::int64_t> scores(const std::vector<Line>& set) = 0;
  /// Way to evict from a full set; `scores` is what scores() just returned.
  virtual std::size_t victim(const std::vector<Line>& set,
                             const std::vector<std::int64_t>& scores) = 0;
  virtual void touched(Line& /*line*/) {}
};

std::size_t argmax_lowest_way(const std::vector<std::int64_t>& values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

class LruPolicy : public ReplacementPolicy {
 public:
  std::vector<std::int64_t> scores(const std::vector<Line>& set) override {
    std::vector<std::int64_t> out;
    for (const auto& l : set)
      if (l.valid) out.push_back(static_cast<std::int64_t>(l.last_touch));
    return out;
  }
  std::size_t victim(const std::vector<Line>&, const std::vector<std::int64_t>& s) override {
    return static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin());
  }
};

class BypassLruPolicy : public LruPolicy {
 public:
  explicit BypassLruPolicy(std::set<Address> pcs) : pcs_(std::move(pcs)) {}
  bool bypass(Address pc) const override { return pcs_.count(pc) > 0; }

 private:
  std::set<Address> pcs_;
};

class BeladyPolicy : public ReplacementPolicy {
 public:
  std::vector<std::int64_t> scores(const std::vector<Line>& set) override {
    std::vector<std::int64_t> out;
    for (const auto& l : set)
      if (l.valid) out.push_back(static_cast<std::int64_t>(l.next_use));
    return out;
  }
  std::size_t victim(const std::vector<Line>&, const std::vector<std::int64_t>& s) override {
    return argmax_lowest_way(s);
  }
};

// Raw engine output is used (not <random> distributions) so replays are
// identical across standard library implementations.
class RandomPolicy : public ReplacementPolicy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  std::vector<std::int64_t> scores(const std::vector<Line>& set) override {
    std::vector<std::int64_t> out;
    for (const auto& l : set)
      if (l.valid) out.push_back(static_cast<std::int64_t>(rng_() >> 44));
    return out;
  }
  std::size_t victim(const std::vector<Line>&, const std::vector<std::int64_t>& s) override {
    return argmax_lowest_way(s);
  }

 private:
  std::mt19937_64 rng_;
};

class ScoredStubPolicy : public ReplacementPolicy {
 public:
  explicit ScoredStubPolicy(std::uint64_t seed) : rng_(seed) {}
  std::vector<std::int64_t> scores(const std::vector<Line>& set) override {
    std::vector<std::int64_t> out;
    for (const auto& l : set)
      if (l.valid) out.push_back(l.stub_score);
    return out;
  }
  std::size_t victim(const std::vector<Line>&, const std::vector<std::int64_t>& s) override {
    return argmax_lowest_way(s);
  }
  void touched(Line& line) override { line.stub_score = static_cast<std::int64_t>(rng_() >> 44); }

 private:
  std::mt19937_64 rng_;
};

std::unique_ptr<ReplacementPolicy> make_policy(const PolicySpec& spec) {
  struct Visitor {
    std::unique_ptr<ReplacementPolicy> operator()(const policy::Lru&) const {
      return std::make_unique<LruPolicy>();
    }
    std::unique_ptr<ReplacementPolicy> operator()(const policy::Belady&) const {
      return std::make_unique<BeladyPolicy>();
    }
    std::unique_ptr<ReplacementPolicy> operator()(const policy::Random& p) const {
      return std::make_unique<RandomPolicy>(p.seed);
    }
    std::unique_ptr<ReplacementPolicy> operator()(const policy::BypassLru& p) const {
      if (p.bypass_pcs.empty())
        throw Error(ErrorCode::ConfigError, "bypass_lru needs at least one bypass PC");
      return std::make_unique<BypassLruPolicy>(p.bypass_pcs);
    }
    std::unique_ptr<ReplacementPolicy> operator()(const policy::ScoredStub& p) const {
      return std::make_unique<ScoredStubPolicy>(p.seed);
    }
  };
  return std::visit(Visitor{}, spec);
}

}  // namespace

TraceBundle simulate(std::span<const Access> trace, const CacheConfig& config,
                     const PolicySpec& spec, const SimulateOptions& options) {
  config.validate();
  auto policy = make_policy(spec);
  const std::uint64_t n = trace.size();

  std::vector<Address> addresses;
  addresses.reserve(trace.size());
  for (const auto& a : trace) addresses.push_back(a.address);
  const auto forward = next_use_table(addresses);
  const auto recency = recency_table(addresses);
  auto next_use_index = [&](std::uint64_t i) {
    return forward[i] ? i + *forward[i] : n;
  };

  std::vector<std::vector<Line>> sets(config.num_sets, std::vector<Line>(config.ways));
  ShadowLru shadow(config.capacity_lines());
  std::unordered_set<Address> seen;
  std::deque<LineRef> history;

  TraceBundle bundle;
  bundle.key = TraceKey(options.workload, policy_name(spec));
  bundle.records.reserve(trace.size());

  for (std::uint64_t i = 0; i < n; ++i) {
    const auto& access = trace[i];
    AccessRecord r;
    r.program_counter = access.pc;
    r.memory_address = access.address;
    r.cache_set_id = set_index(access.address, config);
    r.accessed_address_recency_numeric = recency[i];
    r.accessed_address_reuse_distance_numeric = forward[i];
    r.recent_access_history.assign(history.begin(), history.end());

    auto& set = sets[r.cache_set_id];
    for (const auto& line : set) {
      if (!line.valid) continue;
      r.current_cache_lines.push_back({line.pc, line.address});
      r.current_cache_line_addresses.push_back(line.address);
    }
    const auto scores = policy->scores(set);
    {
      std::size_t k = 0;
      for (const auto& line : set)
        if (line.valid) r.cache_line_eviction_scores.push_back({line.address, scores[k++]});
    }

    const bool shadow_hit = shadow.access(access.address);
    const bool first_touch = seen.insert(access.address).second;

    auto resident = std::find_if(set.begin(), set.end(), [&](const Line& l) {
      return l.valid && l.address == access.address;
    });
    if (resident != set.end()) {
      r.evict = Outcome::Hit;
      r.miss_type = MissType::None;
      resident->pc = access.pc;
      resident->last_touch = i;
      resident->next_use = next_use_index(i);
      policy->touched(*resident);
    } else {
      r.evict = Outcome::Miss;
      r.miss_type = first_touch ? MissType::Compulsory
                                : (shadow_hit ? MissType::Conflict : MissType::Capacity);
      if (!policy->bypass(access.pc)) {
        auto slot = std::find_if(set.begin(), set.end(), [](const Line& l) { return !l.valid; });
        if (slot == set.end()) {
          slot = set.begin() + static_cast<std::ptrdiff_t>(policy->victim(set, scores));
          r.evicted_address = slot->address;
          if (slot->next_use < n) r.evicted_address_reuse_distance_numeric = slot->next_use - i;
        }
        *slot = Line{true, access.pc, access.address, i, next_use_index(i), 0};
        policy->touched(*slot);
      }
    }

    history.push_back({access.pc, access.address});
    if (history.size() > config.history_depth) history.pop_front();
    bundle.records.push_back(std::move(r));
  }

  if (!bundle.records.empty()) {
    bundle.metadata = render_metadata(summarize(bundle.records), options.fold_compulsory);
  }
  const std::string workload_text =
      options.workload_description.empty()
          ? fmt::format("{} ({} accesses, {} sets x {} ways, {} B lines)", options.workload, n,
                        config.num_sets, config.ways, config.line_size_bytes)
          : options.workload_description;
  bundle.description = fmt::format("Workload: {}\nReplacement Policy: {}", workload_text,
                                   policy_description(bundle.key.policy()));
  return bundle;
}

}  // namespace cachescope
