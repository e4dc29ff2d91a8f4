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

#include "cachescope/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "cachescope/hex.hpp"
#include "cachescope/ingest.hpp"
#include "cachescope/simulator.hpp"
#include "cachescope/stats.hpp"
#include "json.hpp"

namespace cachescope::fixtures {

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

BenchQuestion make(std::string id, Category c, std::string text, Expected e, Grounding g = {}) {
  BenchQuestion q;
  q.id = std::move(id);
  q.category = c;
  q.tier = tier_of(c);
  q.text = std::move(text);
  q.expected = std::move(e);
  q.grounding = std::move(g);
  return q;
}

Grounding ground(const TraceKey& key, std::vector<Address> pcs = {}, std::vector<Address> addrs = {}) {
  Grounding g;
  g.trace = key;
  g.filters.workload = key.workload();
  g.filters.policy = key.policy();
  g.filters.pcs = std::move(pcs);
  g.filters.addresses = std::move(addrs);
  return g;
}

// Spans every policy of one workload.
Grounding workload_grounding(const std::string& workload, std::vector<Address> pcs = {}) {
  Grounding g;
  g.filters.workload = workload;
  g.filters.pcs = std::move(pcs);
  return g;
}

std::vector<Address> pcs_of(const TraceBundle& b) {
  std::vector<Address> out;
  for (const auto& s : all_pc_stats(b.records)) out.push_back(s.pc);
  return out;
}

void hit_miss(const TraceStore& store, std::mt19937_64& rng, std::vector<BenchQuestion>& out) {
  const auto keys = store.keys();
  // Candidate indices per bundle whose (pc, address) occurs exactly once,
  // split by outcome.
  std::vector<std::array<std::vector<std::size_t>, 2>> pool(keys.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const auto& recs = store.at(keys[k]).records;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (store.lookup(keys[k], recs[i].program_counter, recs[i].memory_address).size() != 1) continue;
      pool[k][recs[i].is_miss() ? 1 : 0].push_back(i);
    }
  }
  for (int n = 0; n < 30; ++n) {
    const std::size_t k = static_cast<std::size_t>(n) % keys.size();
    int want = n % 2;  // alternate hit / miss
    if (pool[k][want].empty()) want = 1 - want;
    auto& cands = pool[k][want];
    if (cands.empty()) continue;
    const auto pick = rng() % cands.size();
    const auto idx = cands[pick];
    cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(pick));
    const auto& r = store.at(keys[k]).records[idx];
    const std::string verdict(to_string(r.evict));
    out.push_back(make(
        fmt::format("tg-hitmiss-{:02}", n + 1), Category::HitMiss,
        fmt::format("In the {} workload under the {} policy, does the access by PC {} to address {} "
                    "result in a Cache Hit or a Cache Miss?",
                    keys[k].workload(), keys[k].policy(), to_hex(r.program_counter), to_hex(r.memory_address)),
        LabelExpected{{verdict}, {"Cache Hit", "Cache Miss"}},
        ground(keys[k], {r.program_counter}, {r.memory_address})));
  }
}

void miss_rate_and_count(const TraceStore& store, std::vector<BenchQuestion>& out) {
  const auto keys = store.keys();
  std::vector<std::pair<TraceKey, PcStats>> all;
  for (const auto& k : keys)
    for (const auto& s : all_pc_stats(store.at(k).records)) all.emplace_back(k, s);
  // Spread picks over the (bundle, pc) list with a fixed stride.
  for (int n = 0; n < 10; ++n) {
    const auto& [k, s] = all[(static_cast<std::size_t>(n) * 7 + 3) % all.size()];
    out.push_back(make(fmt::format("tg-missrate-{:02}", n + 1), Category::MissRate,
                       fmt::format("What is the miss rate for PC {} in the {} workload under the {} policy?",
                                   to_hex(s.pc), k.workload(), k.policy()),
                       NumericExpected{round2(s.miss_rate), 0.05, "%"}, ground(k, {s.pc})));
  }
  for (int n = 0; n < 5; ++n) {
    const auto& [k, s] = all[(static_cast<std::size_t>(n) * 11 + 5) % all.size()];
    out.push_back(make(fmt::format("tg-count-{:02}", n + 1), Category::Count,
                       fmt::format("How many times has PC {} appeared in this trace, for the {} workload "
                                   "with the {} policy?",
                                   to_hex(s.pc), k.workload(), k.policy()),
                       NumericExpected{static_cast<double>(s.accesses), 0.0, ""}, ground(k, {s.pc})));
  }
}

void policy_comparison(const TraceStore& store, const FixtureConfig& cfg, std::vector<BenchQuestion>& out) {
  int n = 0;
  const Metric metrics[] = {Metric::MissRate, Metric::Hits};
  for (int round = 0; n < 15; ++round) {
    for (const auto& w : cfg.workloads) {
      if (n >= 15) break;
      const auto bundles = store.bundles_for_workload(w);
      const auto pcs = pcs_of(*bundles.front());
      const auto pc = pcs[static_cast<std::size_t>(round) % pcs.size()];
      const auto metric = metrics[(n / 3) % 2];
      const auto ranks = compare_policies(store, w, pc, metric);
      std::vector<std::string> accepted;
      for (const auto& r : ranks)
        if (std::fabs(r.value - ranks.front().value) < 1e-9) accepted.push_back(r.policy);
      std::vector<std::string> choices;
      for (const auto& r : ranks) choices.push_back(r.policy);
      std::sort(choices.begin(), choices.end());
      const std::string ask = metric == Metric::MissRate ? "the lowest miss rate" : "the most hits";
      out.push_back(make(fmt::format("tg-policy-{:02}", n + 1), Category::PolicyComparison,
                         fmt::format("In the {} workload, which replacement policy gives PC {} {}? "
                                     "Choose one of: {}.",
                                     w, to_hex(pc), ask, fmt::join(choices, ", ")),
                         LabelExpected{accepted, choices}, workload_grounding(w, {pc})));
      ++n;
    }
  }
}

void arithmetic(const TraceStore& store, const FixtureConfig& cfg, std::vector<BenchQuestion>& out) {
  for (int n = 0; n < 10; ++n) {
    const auto& w = cfg.workloads[static_cast<std::size_t>(n) % cfg.workloads.size()];
    const auto& lru = store.at(TraceKey(w, "lru"));
    const auto& opt = store.at(TraceKey(w, "belady"));
    if (n < 5) {
      const auto pcs = pcs_of(lru);
      const auto pc = pcs[static_cast<std::size_t>(n) % pcs.size()];
      const auto a = pc_stats(lru.records, pc), b = pc_stats(opt.records, pc);
      const double diff = static_cast<double>(a.misses) - static_cast<double>(b.misses);
      out.push_back(make(fmt::format("tg-arith-{:02}", n + 1), Category::Arithmetic,
                         fmt::format("For PC {} in the {} workload, how many more misses does the lru "
                                     "policy take than the belady policy?",
                                     to_hex(pc), w),
                         NumericExpected{diff, 0.0, ""}, workload_grounding(w, {pc})));
    } else {
      const auto a = summarize(lru.records), b = summarize(opt.records);
      out.push_back(make(fmt::format("tg-arith-{:02}", n + 1), Category::Arithmetic,
                         fmt::format("By how many percentage points is the overall miss rate of the {} "
                                     "workload lower under belady than under lru?",
                                     w),
                         NumericExpected{round2(round2(a.miss_rate) - round2(b.miss_rate)), 0.05, "pp"},
                         workload_grounding(w)));
    }
  }
}

void trick(const TraceStore& store, std::vector<BenchQuestion>& out) {
  const auto keys = store.keys();
  for (int n = 0; n < 5; ++n) {
    const auto& k = keys[(static_cast<std::size_t>(n) * 5 + 1) % keys.size()];
    const auto& b = store.at(k);
    // A PC that looks like the workload's own but never issues an access.
    Address fake = b.records.front().program_counter + 0x3b1 + static_cast<Address>(n) * 0x10;
    while (std::any_of(b.records.begin(), b.records.end(), [&](const AccessRecord& r) { return r.program_counter == fake; }))
      fake += 0x10;
    const auto addr = b.records[static_cast<std::size_t>(n) * 97 % b.records.size()].memory_address;
    const std::string text =
        n % 2 == 0
            ? fmt::format("In the {} workload under the {} policy, does the access by PC {} to address {} "
                          "result in a Cache Hit or a Cache Miss?",
                          k.workload(), k.policy(), to_hex(fake), to_hex(addr))
            : fmt::format("What is the miss rate for PC {} in the {} workload under the {} policy?", to_hex(fake),
                          k.workload(), k.policy());
    out.push_back(make(fmt::format("tg-trick-{:02}", n + 1), Category::Trick, text,
                       TrickExpected{fmt::format("PC {} never appears in {}", to_hex(fake), k.canonical_id()), {}},
                       ground(k, {fake}, n % 2 == 0 ? std::vector<Address>{addr} : std::vector<Address>{})));
  }
}

void ara(const TraceStore& store, const FixtureConfig& cfg, std::vector<BenchQuestion>& out) {
  const std::vector<std::string> evidence{"cites numbers present in the retrieved evidence",
                                          "reaches a correct conclusion", "is clear and concise"};
  auto add = [&](Category c, int n, std::string text, std::string reference, Grounding g = {}) {
    out.push_back(make(fmt::format("ara-{}-{:02}", to_string(c), n), c, std::move(text),
                       RubricExpected{std::move(reference), evidence}, std::move(g)));
  };
  add(Category::MicroarchConcepts, 1, "Why can no replacement policy get more hits than Belady on the same trace?",
      "Belady evicts the resident line whose next use is farthest in the future, which is optimal for a "
      "fixed trace because any other victim is needed no later.");
  add(Category::MicroarchConcepts, 2, "What separates a conflict miss from a capacity miss?",
      "A capacity miss would also occur in a fully associative cache of the same size; a conflict miss "
      "happens only because of the set mapping.");
  add(Category::MicroarchConcepts, 3, "When is an eviction considered wrong?",
      "When the evicted line is reused sooner than the line inserted in its place, or the inserted line "
      "is never reused while the evicted one is.");
  add(Category::MicroarchConcepts, 4, "What does cache bypassing do for a streaming access?",
      "The line is not inserted, so data that will not be reused does not displace lines that will.");
  add(Category::MicroarchConcepts, 5, "How do hot and cold cache sets differ?",
      "Hot sets have high hit rates under the trace; cold sets have low hit rates and often thrash.");

  add(Category::CodeGeneration, 1, "Write a query program that computes the miss rate of PC 0x409270 in mixed under lru.",
      "from mixed/lru | filter program_counter = 0x409270 | aggregate rate_pct is_miss | emit \"The miss rate "
      "for PC 0x409270 is {0}%.\"",
      ground(TraceKey("mixed", "lru"), {0x409270}));
  add(Category::CodeGeneration, 2, "Write a query program that counts the wrong evictions in chase under lru.",
      "from chase/lru | aggregate sum wrong_eviction | emit \"{0} wrong evictions\"");
  add(Category::CodeGeneration, 3, "Write a query program listing the distinct PCs in stream under belady.",
      "from stream/belady | group_by program_counter | aggregate count | emit \"{key}: {0}\"");
  add(Category::CodeGeneration, 4, "Write a query program that extracts the overall miss rate of mixed under random from its metadata.",
      "metadata mixed/random | extract \"([0-9.]+)% miss rate\" | emit \"{0}\"");
  add(Category::CodeGeneration, 5, "Write a query program that finds the five sets with the highest miss rate in chase under lru.",
      "from chase/lru | group_by cache_set_id | aggregate rate_pct is_miss | sort 0 desc | limit 5 | emit \"{key}: {0}%\"");

  int n = 0;
  for (const auto& w : cfg.workloads) {
    const auto ranks = compare_policies(store, w, std::nullopt, Metric::MissRate);
    std::vector<std::string> parts;
    for (const auto& r : ranks) parts.push_back(fmt::format("{} {:.2f}%", r.policy, r.value));
    add(Category::PolicyAnalysis, ++n,
        fmt::format("Compare the replacement policies on the {} workload and explain the ranking.", w),
        fmt::format("Miss rates: {}. Belady is the lower bound; the gap to lru reflects lines evicted "
                    "before their reuse.",
                    fmt::join(parts, ", ")),
        workload_grounding(w));
  }
  {
    const auto& b = store.at(TraceKey("mixed", "lru"));
    const auto cands = bypass_candidates(b.records, 2);
    std::vector<std::string> pcs;
    for (const auto& c : cands) pcs.push_back(fmt::format("{} ({})", to_hex(c.stats.pc), c.reason));
    add(Category::PolicyAnalysis, ++n, "Which PCs in mixed under lru should bypass the cache, and why?",
        fmt::format("Candidates: {}.", fmt::join(pcs, "; ")), ground(TraceKey("mixed", "lru")));
  }
  {
    const auto& b = store.at(TraceKey("chase", "lru"));
    const auto s = summarize(b.records);
    add(Category::PolicyAnalysis, ++n, "How many of the evictions in chase under lru were wrong, and what does that say about lru?",
        fmt::format("{} of {} evictions ({:.2f}%) were wrong; lru often evicts lines that are reused soon.",
                    s.wrong_evictions, s.total_evictions, s.wrong_eviction_pct),
        ground(TraceKey("chase", "lru")));
  }

  n = 0;
  for (const auto& w : cfg.workloads) {
    const auto& b = store.at(TraceKey(w, "lru"));
    const auto top = top_miss_pc(b.records);
    const auto& fn = std::find_if(b.records.begin(), b.records.end(), [&](const AccessRecord& r) {
                       return r.program_counter == top.pc;
                     })->function_name;
    add(Category::WorkloadAnalysis, ++n,
        fmt::format("Which PC causes the most misses in the {} workload under lru, and what code issues it?", w),
        fmt::format("PC {} in {} with {} misses ({:.2f}% miss rate).", to_hex(top.pc), fn, top.miss_count,
                    top.miss_rate),
        ground(TraceKey(w, "lru")));
  }
  {
    const auto& b = store.at(TraceKey("stream", "lru"));
    const auto hot = set_hotness(b.records, 3);
    std::vector<std::string> h, c;
    for (const auto& s : hot.hot) h.push_back(std::to_string(s.set_id));
    for (const auto& s : hot.cold) c.push_back(std::to_string(s.set_id));
    add(Category::WorkloadAnalysis, ++n, "Identify 3 hot and 3 cold sets by hit rate in the stream workload under lru.",
        fmt::format("Hot sets: {}. Cold sets: {}.", fmt::join(h, ", "), fmt::join(c, ", ")),
        ground(TraceKey("stream", "lru")));
  }
  {
    const auto& b = store.at(TraceKey("mixed", "lru"));
    const auto g = group_pcs_by_reuse_variance(b.records);
    auto hexes = [](const std::vector<Address>& v) {
      std::vector<std::string> s;
      for (auto a : v) s.push_back(to_hex(a));
      return s.empty() ? std::string("none") : fmt::format("{}", fmt::join(s, ", "));
    };
    add(Category::WorkloadAnalysis, ++n, "Group the PCs in mixed under lru by the variance of their reuse distance.",
        fmt::format("Low: {}. Medium: {}. High: {}. Unclassified: {}.", hexes(g.low), hexes(g.medium),
                    hexes(g.high), hexes(g.unclassified)),
        ground(TraceKey("mixed", "lru")));
  }

  add(Category::SemanticAnalysis, 1, "What does the code at PC 0x400512 in the chase workload do, and why does it miss?",
      "It follows next pointers in walk_list; each node is a new line over a structure twice the cache size, so "
      "most accesses miss.",
      ground(TraceKey("chase", "lru"), {0x400512}));
  add(Category::SemanticAnalysis, 2, "What is the role of PC 0x401e58 in the stream workload?",
      "It reads a small weights table in lookup_weight; the table fits in cache so it mostly hits.",
      ground(TraceKey("stream", "lru"), {0x401e58}));
  add(Category::SemanticAnalysis, 3, "Explain the access pattern of PC 0x4037aa in the mixed workload.",
      "refresh_potential writes each node once; the addresses are never reused, so every access misses.",
      ground(TraceKey("mixed", "lru"), {0x4037aa}));
  add(Category::SemanticAnalysis, 4, "Why does PC 0x401e7c in the stream workload miss under lru but hit under belady?",
      "stream_propagate scans a region slightly larger than the cache; lru evicts each line just before reuse "
      "while belady keeps part of the scan resident.",
      ground(TraceKey("stream", "lru"), {0x401e7c}));
  add(Category::SemanticAnalysis, 5, "Which function in the mixed workload benefits most from caching?",
      "The createwayar loop at PC 0x409270 reuses a working set that fits in the cache and hits almost always.",
      ground(TraceKey("mixed", "lru"), {0x409270}));
}

}  // namespace

TraceStore build_store(const FixtureConfig& cfg, std::vector<workloads::SyntheticTrace>* traces) {
  CacheConfig cache;
  cache.num_sets = cfg.num_sets;
  cache.ways = cfg.ways;
  cache.validate();
  TraceStore store;
  for (const auto& w : cfg.workloads) {
    auto t = workloads::generate(w, cfg.length, cache.capacity_lines(), cfg.seed);
    for (const auto& p : cfg.policies) {
      SimulateOptions opts;
      opts.workload = w;
      opts.workload_description = t.description;
      auto bundle = simulate(t.accesses, cache, parse_policy(p, cfg.seed), opts);
      store.put_bundle(enrich(std::move(bundle), t.symbols));
    }
    if (traces) traces->push_back(std::move(t));
  }
  return store;
}

std::vector<BenchQuestion> generate_questions(const TraceStore& store, const FixtureConfig& cfg) {
  for (const char* w : {"chase", "mixed", "stream"})
    if (std::find(cfg.workloads.begin(), cfg.workloads.end(), w) == cfg.workloads.end())
      throw Error(ErrorCode::ConfigError, fmt::format("the question suite needs the {} workload", w));
  for (const char* p : {"lru", "belady"})
    if (std::find(cfg.policies.begin(), cfg.policies.end(), p) == cfg.policies.end())
      throw Error(ErrorCode::ConfigError, fmt::format("the question suite needs the {} policy", p));
  std::mt19937_64 rng(cfg.seed);
  std::vector<BenchQuestion> out;
  hit_miss(store, rng, out);
  miss_rate_and_count(store, out);
  policy_comparison(store, cfg, out);
  arithmetic(store, cfg, out);
  trick(store, out);
  ara(store, cfg, out);
  std::stable_sort(out.begin(), out.end(), [](const BenchQuestion& a, const BenchQuestion& b) {
    return static_cast<int>(a.category) < static_cast<int>(b.category);
  });
  return out;
}

FixtureSet build(const FixtureConfig& config) {
  FixtureSet set;
  set.config = config;
  set.store = build_store(config, &set.traces);
  set.questions = generate_questions(set.store, config);
  return set;
}

std::string config_to_json(const FixtureConfig& c) {
  nlohmann::ordered_json j;
  j["length"] = c.length;
  j["num_sets"] = c.num_sets;
  j["ways"] = c.ways;
  j["seed"] = c.seed;
  j["workloads"] = c.workloads;
  j["policies"] = c.policies;
  return j.dump(2) + "\n";
}

FixtureConfig config_from_json(std::string_view text) {
  FixtureConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [k, v] : j.items()) {
      if (k == "length") c.length = v.get<std::size_t>();
      else if (k == "num_sets") c.num_sets = v.get<std::uint32_t>();
      else if (k == "ways") c.ways = v.get<std::uint32_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "workloads") c.workloads = v.get<std::vector<std::string>>();
      else if (k == "policies") c.policies = v.get<std::vector<std::string>>();
      else throw Error(ErrorCode::ConfigError, fmt::format("unknown fixture config field '{}'", k));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, fmt::format("bad fixture config: {}", e.what()));
  }
  return c;
}

void write(const FixtureSet& set, const std::filesystem::path& dir,
           const std::optional<std::filesystem::path>& store_dir) {
  namespace fs = std::filesystem;
  auto open = [](const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", p.string()));
    return out;
  };
  {
    auto out = open(dir / "fixture.json");
    out << config_to_json(set.config);
  }
  {
    auto out = open(dir / "questions.jsonl");
    write_questions(set.questions, out);
  }
  for (const auto& t : set.traces) {
    auto tr = open(dir / "traces" / (t.name + ".trace"));
    write_trace(t.accesses, tr);
    auto sym = open(dir / "symbols" / (t.name + ".sym"));
    write_symbol_map(t.symbols, sym);
  }
  if (store_dir) save_store(set.store, *store_dir);
}

}  // namespace cachescope::fixtures
