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

// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any fail. Every check runs offline against mock clients.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <functional>
#include <random>
#include <string>

#include <fmt/format.h>

#include "cachescope/bench.hpp"
#include "cachescope/errors.hpp"
#include "cachescope/fixtures.hpp"
#include "cachescope/hex.hpp"
#include "cachescope/ranger.hpp"
#include "cachescope/ranger_dsl.hpp"
#include "cachescope/sieve.hpp"
#include "cachescope/simulator.hpp"
#include "cachescope/stats.hpp"
#include "cachescope/workloads.hpp"
#include "dsl_fuzz.hpp"
#include "oracles.hpp"

namespace cachescope {
namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

std::filesystem::path fs_fixture_questions() {
  return std::filesystem::path(CACHESCOPE_FIXTURE_DIR) / "questions.jsonl";
}

std::string read_fixture_config() {
  std::ifstream in(std::filesystem::path(CACHESCOPE_FIXTURE_DIR) / "fixture.json");
  if (!in) throw Error(ErrorCode::IoError, "cannot read fixture.json");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

CacheConfig geometry(std::uint32_t sets, std::uint32_t ways) {
  CacheConfig c;
  c.num_sets = sets;
  c.ways = ways;
  return c;
}

std::size_t hits(const TraceBundle& b) {
  std::size_t n = 0;
  for (const auto& r : b.records) n += r.is_miss() ? 0 : 1;
  return n;
}

std::vector<Address> addresses(const std::vector<Access>& t) {
  std::vector<Address> a;
  for (const auto& x : t) a.push_back(x.address);
  return a;
}

// 1. Belady hit count equals the exhaustive-search maximum.
Verdict belady_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t ok = 0;
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t sets = 1 + rng() % 2, ways = 1 + rng() % 2;
    const auto t = oracle::random_trace(rng, 1 + rng() % 12, 1 + rng() % 6);
    ok += hits(simulate(t, geometry(sets, ways), policy::Belady{})) == oracle::exhaustive_max_hits(t, sets, ways);
  }
  const double s = seconds_since(t0);
  return {ok == 200 && s < 10, fmt::format("{}/200 instances equal the exhaustive maximum in {:.2f} s (limit 10 s)", ok, s)};
}

// 2. LRU hit/miss sequence equals a naive per-set list LRU.
Verdict lru_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::size_t ok = 0;
  for (int i = 0; i < 500; ++i) {
    const std::uint32_t sets = 1u << (rng() % 4), ways = 1 + rng() % 4;
    const auto t = oracle::random_trace(rng, 1 + rng() % 300, 1 + rng() % 32);
    const auto b = simulate(t, geometry(sets, ways), policy::Lru{});
    const auto want = oracle::naive_lru_hits(t, sets, ways);
    bool same = true;
    for (std::size_t k = 0; k < t.size(); ++k) same = same && (!b.records[k].is_miss()) == want[k];
    ok += same;
  }
  const double s = seconds_since(t0);
  return {ok == 500 && s < 5, fmt::format("{}/500 traces identical to the naive reference in {:.2f} s (limit 5 s)", ok, s)};
}

// 3. Forward and backward distances match quadratic rescans, in the tables
// and in the simulated records.
Verdict distance_oracles() {
  std::mt19937_64 rng(303);
  std::size_t ok = 0;
  for (int i = 0; i < 200; ++i) {
    const auto t = oracle::random_trace(rng, 1 + rng() % 120, 1 + rng() % 16);
    const auto a = addresses(t);
    const auto fwd = oracle::rescan_forward(a), back = oracle::rescan_recency(a);
    bool same = next_use_table(a) == fwd && recency_table(a) == back;
    const auto b = simulate(t, geometry(2, 2), policy::Lru{});
    for (std::size_t k = 0; k < a.size(); ++k)
      same = same && b.records[k].accessed_address_reuse_distance_numeric == fwd[k] &&
             b.records[k].accessed_address_recency_numeric == back[k];
    ok += same;
  }
  return {ok == 200, fmt::format("{}/200 traces match the O(n^2) rescans", ok)};
}

// 4. The 2304 vs 3132 case, the four presence combinations, and simulated
// wrong-eviction counts against a rescan.
Verdict wrong_eviction() {
  using D = std::optional<std::uint64_t>;
  struct Case {
    D evicted, inserted;
    bool want;
  };
  const Case cases[] = {{2304, 3132, true}, {3132, 2304, false}, {10, std::nullopt, true},
                        {std::nullopt, 5, false}, {std::nullopt, std::nullopt, false}, {7, 7, false}};
  std::size_t table_ok = 0;
  for (const auto& c : cases) table_ok += is_wrong_eviction(c.evicted, c.inserted) == c.want;

  std::mt19937_64 rng(404);
  std::size_t sim_ok = 0;
  for (int i = 0; i < 100; ++i) {
    const auto t = oracle::random_trace(rng, 2 + rng() % 150, 2 + rng() % 20);
    const auto a = addresses(t);
    const auto fwd = oracle::rescan_forward(a);
    const auto b = simulate(t, geometry(2, 2), i % 2 ? PolicySpec{policy::Lru{}} : PolicySpec{policy::Random{7}});
    std::uint64_t want = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const auto& ev = b.records[k].evicted_address;
      if (!ev) continue;
      D evicted_fd;
      for (std::size_t j = k + 1; j < a.size(); ++j)
        if (a[j] == *ev) {
          evicted_fd = j - k;
          break;
        }
      const bool wrong = evicted_fd && (!fwd[k] || *evicted_fd < *fwd[k]);
      want += wrong;
    }
    sim_ok += summarize(b.records).wrong_evictions == want;
  }
  return {table_ok == std::size(cases) && sim_ok == 100,
          fmt::format("{}/{} predicate cases, {}/100 simulated counts match a rescan", table_ok, std::size(cases), sim_ok)};
}

// 5. miss_rate = 100 * misses / accesses on simulated bundles, and the
// 140704 / 133542 rendering.
Verdict metadata_arithmetic() {
  std::mt19937_64 rng(505);
  std::size_t ok = 0;
  const char* names[] = {"lru", "belady", "random", "scored_stub"};
  for (int i = 0; i < 100; ++i) {
    const auto t = oracle::random_trace(rng, 1 + rng() % 200, 1 + rng() % 24);
    const auto b = simulate(t, geometry(1u << (rng() % 3), 1 + rng() % 3), parse_policy(names[i % 4], 9));
    std::size_t misses = 0;
    for (const auto& r : b.records) misses += r.is_miss();
    const double want = 100.0 * static_cast<double>(misses) / static_cast<double>(b.records.size());
    const auto s = summarize(b.records);
    const auto back = parse_metadata(render_metadata(s));
    ok += std::fabs(s.miss_rate - want) <= 0.01 && std::fabs(back.miss_rate - want) <= 0.01;
  }
  TraceSummary big;
  big.total_accesses = 140704;
  big.total_misses = 133542;
  big.miss_rate = 100.0 * 133542 / 140704;
  big.pct_capacity = 100;
  const bool rendered = render_metadata(big).find("94.91% miss rate") != std::string::npos;
  return {ok == 100 && rendered,
          fmt::format("{}/100 bundles within 0.01 pp; 133542/140704 renders \"94.91% miss rate\": {}", ok,
                      rendered ? "yes" : "no")};
}

// 6. Each fixture HitMiss tuple query retrieves an excerpt holding that exact record.
Verdict anchored_recall(const fixtures::FixtureSet& fx) {
  std::size_t total = 0, ok = 0;
  for (const auto& q : fx.questions) {
    if (q.category != Category::HitMiss) continue;
    ++total;
    const auto& pcs = q.grounding.filters.pcs;
    const auto& addrs = q.grounding.filters.addresses;
    if (!q.grounding.trace || pcs.size() != 1 || addrs.size() != 1) continue;
    const auto& records = fx.store.at(*q.grounding.trace).records;
    std::optional<std::size_t> want;  // first matching record by scan
    for (std::size_t i = 0; i < records.size() && !want; ++i)
      if (records[i].program_counter == pcs[0] && records[i].memory_address == addrs[0]) want = i;
    try {
      const auto ctx = sieve_query(fx.store, q.text);
      bool found = false;
      for (std::size_t k = 0; k < ctx.trace_excerpt.size(); ++k)
        found = found || (want && ctx.excerpt_indices[k] == *want && ctx.trace_excerpt[k] == records[*want]);
      ok += found && ctx.provenance.key == *q.grounding.trace;
    } catch (const Error&) {
    }
  }
  return {total == 30 && ok == 30, fmt::format("{}/{} templated tuple queries retrieve the exact record", ok, total)};
}

// A fixed bundle for the scripted programs: PC 0x405832 appears four times
// among 24 accesses by three other PCs.
TraceStore dsl_store() {
  std::vector<Access> t;
  for (int i = 0; i < 24; ++i) t.push_back({0x400100 + static_cast<Address>(i % 3), 0x10000 + 64u * (i % 7)});
  for (int i = 0; i < 4; ++i) t.insert(t.begin() + 5 * i, Access{0x405832, 0x20000 + 64u * (i % 2)});
  SimulateOptions o;
  o.workload = "plant";
  TraceStore st;
  st.put_bundle(simulate(t, geometry(2, 2), policy::Lru{}, o));
  TraceSummary big;
  big.total_accesses = 140704;
  big.total_misses = 133542;
  big.miss_rate = 100.0 * 133542 / 140704;
  big.pct_capacity = 100;
  TraceBundle b;
  b.key = TraceKey("mcf", "parrot");
  b.metadata = render_metadata(big);
  st.put_bundle(b);
  return st;
}

// 7. Scripted programs, the retry loop, and a random-AST fuzz corpus.
Verdict ranger_sandbox() {
  const auto store = dsl_store();
  const auto& recs = store.at(TraceKey("plant", "lru")).records;
  std::size_t n_pc = 0, miss_pc = 0, misses = 0, at_20000 = 0, set1 = 0;
  for (const auto& r : recs) {
    misses += r.is_miss();
    at_20000 += r.memory_address == 0x20000;
    set1 += r.cache_set_id == 1;
    if (r.program_counter == 0x405832) {
      ++n_pc;
      miss_pc += r.is_miss();
    }
  }
  auto pct = [](std::size_t a, std::size_t b) { return fmt::format("{:.2f}", 100.0 * static_cast<double>(a) / static_cast<double>(b)); };
  const std::vector<std::pair<std::string, std::string>> programs{
      {"from plant/lru | filter program_counter = 0x405832 | aggregate count | emit \"{0} times\"", fmt::format("{} times", n_pc)},
      {"from plant/lru | group_by program_counter | emit \"{key}\"", "0x400100, 0x400101, 0x400102, 0x405832"},
      {"from plant/lru | group_by program_counter | aggregate count | emit \"{key}={0}\"",
       "0x400100=8, 0x400101=8, 0x400102=8, 0x405832=4"},
      {"from plant/lru | filter program_counter = 0x405832 | aggregate rate_pct is_miss | emit \"{0}%\"",
       pct(miss_pc, n_pc) + "%"},
      {"from plant/lru | aggregate sum is_miss | emit \"{0} misses\"", fmt::format("{} misses", misses)},
      {"from plant/lru | filter memory_address = 0x20000 | aggregate count | emit \"{0}\"", fmt::format("{}", at_20000)},
      {"from plant/lru | filter cache_set_id = 1 | aggregate count | emit \"{0}\"", fmt::format("{}", set1)},
      {"metadata mcf/parrot | extract \"([0-9.]+)% miss rate\" | emit \"{0}\"", "94.91"},
      {"metadata mcf/parrot | extract \"([0-9]+) total accesses\" | emit \"{{n}} {0}\"", "{n} 140704"},
      {"from plant/lru | group_by program_counter | aggregate count | sort 0 asc | limit 1 | emit \"{key}\"", "0x405832"},
  };
  std::size_t scripted_ok = 0;
  for (const auto& [text, want] : programs) {
    try {
      ScriptedClient client({text});
      const auto out = ranger_retrieve("q", client, store);
      scripted_ok += out.result == want && out.attempts == 1;
    } catch (const Error& e) {
      std::fprintf(stderr, "%s: %s\n", text.c_str(), e.what());
    }
  }

  bool retry_ok = false;
  try {
    ScriptedClient once({programs[0].first});
    ScriptedClient twice({"not a program", programs[0].first});
    ScriptedClient never(std::vector<std::string>(10, "not a program"));
    const bool a1 = ranger_retrieve("q", once, store, 3).attempts == 1;
    const bool a2 = ranger_retrieve("q", twice, store, 3).attempts == 2;
    bool a4 = false;
    try {
      ranger_retrieve("q", never, store, 3);
    } catch (const ExhaustedRetries& e) {
      a4 = e.transcript().size() == 4 && never.received().size() == 4;
    }
    retry_ok = a1 && a2 && a4;
  } catch (const Error&) {
  }

  const TraceStore before = store;
  fuzz::ProgramGen gen(2024, {{"plant", "lru"}, {"mcf", "parrot"}});
  std::size_t evaluated = 0, crashed = 0;
  std::vector<std::string> first_run;
  for (int i = 0; i < 1000; ++i) {
    const auto p = gen.next();
    try {
      first_run.push_back(dsl::evaluate(p, store).text);
      ++evaluated;
    } catch (const Error&) {
      first_run.emplace_back("<error>");
    } catch (...) {
      ++crashed;
    }
  }
  fuzz::ProgramGen again(2024, {{"plant", "lru"}, {"mcf", "parrot"}});
  std::size_t repeat_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    try {
      text = dsl::evaluate(again.next(), store).text;
    } catch (const Error&) {
      text = "<error>";
    } catch (...) {
    }
    repeat_ok += static_cast<std::size_t>(i) < first_run.size() && first_run[i] == text;
  }
  const bool unchanged = before == store;
  return {scripted_ok == 10 && retry_ok && crashed == 0 && unchanged && repeat_ok == 1000,
          fmt::format("{}/10 scripted programs; retry attempts 1/2/4: {}; fuzz 1000 programs ({} evaluated, {} "
                      "non-Error exceptions, {}/1000 repeat identically, store unchanged: {})",
                      scripted_ok, retry_ok ? "ok" : "wrong", evaluated, crashed, repeat_ok, unchanged ? "yes" : "no")};
}

// 8. Weighted totals from per-category inputs.
Verdict weighted_totals() {
  const double sieve = weighted_total({{83.3, 30}, {90, 10}, {60, 15}, {0, 5}, {30, 10}, {80, 5}});
  const double ranger = weighted_total({{100, 30}, {100, 10}, {66.67, 15}, {100, 5}, {70, 10}, {100, 5}});
  return {std::fabs(sieve - 66.7) <= 0.1 && std::fabs(ranger - 89.33) <= 0.1,
          fmt::format("{:.2f}% (want 66.7) and {:.2f}% (want 89.33), tolerance 0.1 pp", sieve, ranger)};
}

// 9. Bypassing the stats-picked PC beats plain LRU on the mixed workload.
Verdict bypass_direction() {
  const auto w = workloads::mixed(4000, 256, 1);
  const auto c = geometry(64, 4);
  const auto lru = simulate(w.accesses, c, policy::Lru{});
  const auto cands = bypass_candidates(lru.records, 1);
  if (cands.empty()) return {false, "no bypass candidate found"};
  const auto bypass = simulate(w.accesses, c, policy::BypassLru{{cands[0].stats.pc}});
  const double h0 = 100.0 * static_cast<double>(hits(lru)) / static_cast<double>(lru.records.size());
  const double h1 = 100.0 * static_cast<double>(hits(bypass)) / static_cast<double>(bypass.records.size());
  return {h1 > h0, fmt::format("bypassing {}: hit rate {:.2f}% vs LRU {:.2f}%", to_hex(cands[0].stats.pc), h1, h0)};
}

// 10. The echo client over the shipped suite scores 100% on HitMiss,
// MissRate and Count under both the sieve and auto retrievers.
Verdict echo_bench(const fixtures::FixtureSet& fx) {
  const auto suite = load_questions(fs_fixture_questions());
  GroundedEchoClient echo;
  TemplateProgramClient programs(fx.store);
  std::string detail;
  bool pass = true;
  for (auto choice : {RetrieverChoice::Sieve, RetrieverChoice::Auto}) {
    PipelineConfig cfg;
    cfg.retriever = choice;
    cfg.answer_client = &echo;
    cfg.program_client = &programs;
    cfg.jobs = 4;
    const auto rep = run_bench(fx.store, cfg, suite.questions);
    detail += fmt::format("{}{}:", detail.empty() ? "" : "; ", to_string(choice));
    for (const auto& c : rep.categories) {
      if (c.category != Category::HitMiss && c.category != Category::MissRate && c.category != Category::Count) continue;
      detail += fmt::format(" {}={:.0f}%", to_string(c.category), c.accuracy_pct);
      pass = pass && c.count > 0 && c.accuracy_pct == 100.0;
    }
  }
  return {pass, detail};
}

}  // namespace
}  // namespace cachescope

int main() {
  using namespace cachescope;
  const auto fx = fixtures::build(fixtures::config_from_json(read_fixture_config()));
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"Belady optimality", belady_optimality},
      {"LRU oracle equivalence", lru_equivalence},
      {"Reuse/recency oracles", distance_oracles},
      {"Wrong-eviction predicate", wrong_eviction},
      {"Metadata arithmetic", metadata_arithmetic},
      {"Sieve anchored recall", [&] { return anchored_recall(fx); }},
      {"Ranger sandbox", ranger_sandbox},
      {"Bench weighted totals", weighted_totals},
      {"Bypass direction", bypass_direction},
      {"End-to-end mock bench", [&] { return echo_bench(fx); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
  }
  return failed == 0 ? 0 : 1;
}
