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

#include "cachescope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "cachescope/simulator.hpp"

namespace cachescope {

namespace {

struct PcAccumulator {
  PcStats s;
  double reuse_sum = 0;
  std::vector<double> reuse;
  double evicted_sum = 0;
  std::uint64_t evicted_samples = 0;

  void add(const AccessRecord& r) {
    ++s.accesses;
    if (r.is_miss()) ++s.misses;
    else ++s.hits;
    if (r.accessed_address_reuse_distance_numeric) {
      reuse.push_back(static_cast<double>(*r.accessed_address_reuse_distance_numeric));
      reuse_sum += reuse.back();
    }
    if (r.evicted_address) {
      ++s.eviction_count;
      if (is_wrong_eviction(r.evicted_address_reuse_distance_numeric,
                            r.accessed_address_reuse_distance_numeric))
        ++s.wrong_evictions;
      if (r.evicted_address_reuse_distance_numeric) {
        evicted_sum += static_cast<double>(*r.evicted_address_reuse_distance_numeric);
        ++evicted_samples;
      }
    }
  }

  PcStats finish() {
    s.miss_rate = 100.0 * static_cast<double>(s.misses) / static_cast<double>(s.accesses);
    s.reused_accesses = reuse.size();
    if (!reuse.empty()) {
      const double mean = reuse_sum / static_cast<double>(reuse.size());
      s.mean_reuse_distance = mean;
      if (reuse.size() >= 2) {
        double ss = 0;
        for (double v : reuse) ss += (v - mean) * (v - mean);
        s.std_reuse_distance = std::sqrt(ss / static_cast<double>(reuse.size() - 1));
      }
    }
    if (evicted_samples > 0)
      s.mean_evicted_reuse_distance = evicted_sum / static_cast<double>(evicted_samples);
    s.wrong_eviction_pct = s.eviction_count == 0
                               ? 0.0
                               : 100.0 * static_cast<double>(s.wrong_evictions) /
                                     static_cast<double>(s.eviction_count);
    return s;
  }
};

// a/b < c/d without rounding.
bool ratio_less(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return static_cast<unsigned __int128>(a) * d < static_cast<unsigned __int128>(c) * b;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

PcStats pc_stats(std::span<const AccessRecord> records, Address pc) {
  PcAccumulator acc;
  acc.s.pc = pc;
  for (const auto& r : records)
    if (r.program_counter == pc) acc.add(r);
  if (acc.s.accesses == 0)
    throw Error(ErrorCode::PcNotFound, fmt::format("PC {} does not appear in the trace", to_hex(pc)));
  return acc.finish();
}

std::vector<PcStats> all_pc_stats(std::span<const AccessRecord> records) {
  std::map<Address, PcAccumulator> by_pc;
  for (const auto& r : records) {
    auto& acc = by_pc[r.program_counter];
    acc.s.pc = r.program_counter;
    acc.add(r);
  }
  std::vector<PcStats> out;
  out.reserve(by_pc.size());
  for (auto& [_, acc] : by_pc) out.push_back(acc.finish());
  return out;
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::MissRate: return "miss_rate";
    case Metric::HitRate: return "hit_rate";
    case Metric::Misses: return "misses";
    case Metric::Hits: return "hits";
    case Metric::WrongEvictionPct: return "wrong_eviction_pct";
  }
  return "miss_rate";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (auto m : {Metric::MissRate, Metric::HitRate, Metric::Misses, Metric::Hits,
                 Metric::WrongEvictionPct}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

bool lower_is_better(Metric metric) {
  return metric == Metric::MissRate || metric == Metric::Misses ||
         metric == Metric::WrongEvictionPct;
}

std::vector<PolicyRank> compare_policies(const TraceStore& store, std::string_view workload,
                                         std::optional<Address> pc, Metric metric) {
  const auto bundles = store.bundles_for_workload(workload);
  if (bundles.empty())
    throw Error(ErrorCode::WorkloadNotFound, fmt::format("no traces for workload '{}'", workload));
  std::vector<PolicyRank> ranks;
  for (const auto* b : bundles) {
    PcStats s;
    if (pc) {
      try {
        s = pc_stats(b->records, *pc);
      } catch (const Error&) {
        continue;
      }
    } else {
      PcAccumulator acc;
      for (const auto& r : b->records) acc.add(r);
      if (acc.s.accesses == 0) continue;
      s = acc.finish();
    }
    double value = 0;
    switch (metric) {
      case Metric::MissRate: value = s.miss_rate; break;
      case Metric::HitRate: value = s.hit_rate(); break;
      case Metric::Misses: value = static_cast<double>(s.misses); break;
      case Metric::Hits: value = static_cast<double>(s.hits); break;
      case Metric::WrongEvictionPct: value = s.wrong_eviction_pct; break;
    }
    ranks.push_back({b->key.policy(), value});
  }
  if (ranks.empty()) {
    throw Error(ErrorCode::PcNotFound, fmt::format("PC {} does not appear in any '{}' trace",
                                                   to_hex(pc.value_or(0)), workload));
  }
  const bool ascending = lower_is_better(metric);
  std::sort(ranks.begin(), ranks.end(), [&](const PolicyRank& a, const PolicyRank& b) {
    if (a.value != b.value) return ascending ? a.value < b.value : a.value > b.value;
    return a.policy < b.policy;
  });
  return ranks;
}

SetHotness set_hotness(std::span<const AccessRecord> records, std::size_t k,
                       std::uint64_t min_accesses) {
  if (k == 0) throw Error(ErrorCode::NotEnoughSets, "k must be at least 1");
  std::map<std::uint32_t, SetStats> by_set;
  for (const auto& r : records) {
    auto& s = by_set[r.cache_set_id];
    s.set_id = r.cache_set_id;
    ++s.accesses;
    if (!r.is_miss()) ++s.hits;
  }
  SetHotness out;
  std::vector<SetStats> eligible;
  for (auto& [_, s] : by_set) {
    s.hit_rate = 100.0 * static_cast<double>(s.hits) / static_cast<double>(s.accesses);
    out.table.push_back(s);
    if (s.accesses >= min_accesses) eligible.push_back(s);
  }
  if (eligible.size() < k) {
    throw Error(ErrorCode::NotEnoughSets,
                fmt::format("only {} sets have >= {} accesses, need {}", eligible.size(),
                            min_accesses, k));
  }
  auto hotter = [](const SetStats& a, const SetStats& b) {
    if (ratio_less(b.hits, b.accesses, a.hits, a.accesses)) return true;
    if (ratio_less(a.hits, a.accesses, b.hits, b.accesses)) return false;
    return a.set_id < b.set_id;
  };
  auto colder = [](const SetStats& a, const SetStats& b) {
    if (ratio_less(a.hits, a.accesses, b.hits, b.accesses)) return true;
    if (ratio_less(b.hits, b.accesses, a.hits, a.accesses)) return false;
    return a.set_id < b.set_id;
  };
  auto hot = eligible;
  std::sort(hot.begin(), hot.end(), hotter);
  out.hot.assign(hot.begin(), hot.begin() + static_cast<std::ptrdiff_t>(k));
  auto cold = eligible;
  std::sort(cold.begin(), cold.end(), colder);
  out.cold.assign(cold.begin(), cold.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

ReuseVarianceGroups group_pcs_by_reuse_variance(std::span<const AccessRecord> records) {
  ReuseVarianceGroups g;
  std::vector<std::pair<Address, double>> classified;
  for (const auto& s : all_pc_stats(records)) {
    if (s.std_reuse_distance) classified.emplace_back(s.pc, *s.std_reuse_distance);
    else g.unclassified.push_back(s.pc);
  }
  if (classified.empty()) return g;
  std::vector<double> stds;
  for (const auto& [_, sd] : classified) stds.push_back(sd);
  std::sort(stds.begin(), stds.end());
  g.low_cutoff = quantile(stds, 1.0 / 3.0);
  g.high_cutoff = quantile(stds, 2.0 / 3.0);
  for (const auto& [pc, sd] : classified) {
    if (sd <= g.low_cutoff) g.low.push_back(pc);
    else if (sd <= g.high_cutoff) g.medium.push_back(pc);
    else g.high.push_back(pc);
  }
  return g;
}

std::vector<BypassCandidate> bypass_candidates(std::span<const AccessRecord> records,
                                               std::size_t max_candidates) {
  auto all = all_pc_stats(records);
  constexpr double kNever = std::numeric_limits<double>::infinity();
  std::sort(all.begin(), all.end(), [&](const PcStats& a, const PcStats& b) {
    if (ratio_less(a.hits, a.accesses, b.hits, b.accesses)) return true;
    if (ratio_less(b.hits, b.accesses, a.hits, a.accesses)) return false;
    const double ra = a.mean_reuse_distance.value_or(kNever);
    const double rb = b.mean_reuse_distance.value_or(kNever);
    if (ra != rb) return ra > rb;
    return a.pc < b.pc;
  });
  std::vector<BypassCandidate> out;
  for (const auto& s : all) {
    if (out.size() >= max_candidates) break;
    std::string reuse = s.mean_reuse_distance
                            ? fmt::format("mean reuse distance {:.2f}", *s.mean_reuse_distance)
                            : std::string("never reused");
    out.push_back({s, fmt::format("hit rate {:.2f}% over {} accesses; {}", s.hit_rate(),
                                  s.accesses, reuse)});
  }
  return out;
}

TopMissPc top_miss_pc(std::span<const AccessRecord> records) {
  const auto all = all_pc_stats(records);
  const PcStats* best = nullptr;
  for (const auto& s : all) {
    if (s.misses > 0 && (!best || s.misses > best->misses)) best = &s;
  }
  if (!best) throw Error(ErrorCode::NoMisses, "the slice has no misses");
  return {best->pc, best->misses, best->miss_rate};
}

}  // namespace cachescope
