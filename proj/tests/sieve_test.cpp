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

#include <gtest/gtest.h>

#include <random>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "cachescope/hex.hpp"
#include "cachescope/sieve.hpp"
#include "cachescope/simulator.hpp"
#include "cachescope/workloads.hpp"

namespace cachescope {
namespace {

const std::vector<std::string> kWorkloads{"astar", "lbm", "mcf"};
const std::vector<std::string> kPolicies{"belady", "lru", "parrot"};

CacheConfig cache() {
  CacheConfig c;
  c.num_sets = 16;
  c.ways = 4;
  return c;
}

// lbm and mcf under two policies each; "parrot" is LRU under another name so
// the key scheme can be exercised with a non-builtin policy.
const TraceStore& store() {
  static const TraceStore s = [] {
    TraceStore st;
    for (const char* w : {"lbm", "mcf"}) {
      auto t = workloads::generate(w == std::string("lbm") ? "stream" : "mixed", 600, 64, 3);
      for (const char* p : {"lru", "parrot"}) {
        SimulateOptions o;
        o.workload = w;
        auto b = simulate(t.accesses, cache(), policy::Lru{}, o);
        b.key = TraceKey(w, p);
        st.put_bundle(b);
      }
    }
    auto t = workloads::mixed(300, 64, 9);
    SimulateOptions o;
    o.workload = "astar";
    st.put_bundle(simulate(t.accesses, cache(), policy::Belady{}, o));
    return st;
  }();
  return s;
}

TEST(Tokenize, KeepsHexWhole) {
  EXPECT_EQ(tokenize("PC 0x4037BA, on MCF!"), (std::vector<std::string>{"pc", "0x4037ba", "on", "mcf"}));
  EXPECT_TRUE(tokenize("  ").empty());
}

TEST(EditSimilarity, Bounds) {
  EXPECT_DOUBLE_EQ(edit_similarity("lru", "lru"), 1.0);
  EXPECT_DOUBLE_EQ(edit_similarity("abc", "xyz"), 0.0);
  EXPECT_NEAR(edit_similarity("parot", "parrot"), 1.0 - 1.0 / 6.0, 1e-12);
}

TEST(ParseQuery, PolicyAndWorkloadByName) {
  auto f = parse_query("miss rate for PC 0x4037ba on the mcf workload with PARROT", kWorkloads, kPolicies);
  EXPECT_EQ(f.workload, "mcf");
  EXPECT_EQ(f.policy, "parrot");
  EXPECT_EQ(f.pcs, std::vector<Address>{0x4037ba});
  EXPECT_TRUE(f.addresses.empty());
}

TEST(ParseQuery, UnanchoredIsEmpty) {
  auto f = parse_query("hello", kWorkloads, kPolicies);
  EXPECT_FALSE(f.anchored());
  EXPECT_EQ(f, QueryFilters{});
}

TEST(ParseQuery, PcAndAddress) {
  auto f = parse_query("Does PC 0x401e31 and address 0x35e798a637f in lbm under PARROT hit?", kWorkloads,
                       kPolicies);
  EXPECT_EQ(f.pcs, std::vector<Address>{0x401e31});
  EXPECT_EQ(f.addresses, std::vector<Address>{0x35e798a637f});
  EXPECT_EQ(f.workload, "lbm");
  EXPECT_EQ(f.policy, "parrot");
}

TEST(ParseQuery, HexClassification) {
  // Without a keyword, short literals are PCs and long ones addresses.
  auto f = parse_query("0x401e31 0x35e798a637f", kWorkloads, kPolicies);
  EXPECT_EQ(f.pcs, std::vector<Address>{0x401e31});
  EXPECT_EQ(f.addresses, std::vector<Address>{0x35e798a637f});
  // A keyword wins over length.
  f = parse_query("address 0x4000 and pc 0x35e798a637f", kWorkloads, kPolicies);
  EXPECT_EQ(f.addresses, std::vector<Address>{0x4000});
  EXPECT_EQ(f.pcs, std::vector<Address>{0x35e798a637f});
}

TEST(ParseQuery, MisspelledNameStillMatches) {
  auto f = parse_query("what happens in lbm with parot", kWorkloads, kPolicies);
  EXPECT_EQ(f.policy, "parrot");
}

TEST(ParseQuery, TiedNamesStayAbsent) {
  auto f = parse_query("compare lbm and mcf for PC 0x1234", kWorkloads, kPolicies);
  EXPECT_FALSE(f.workload);
}

TEST(ParseQuery, OutcomeAndSet) {
  auto f = parse_query("only misses in set 12 of mcf", kWorkloads, kPolicies);
  EXPECT_EQ(f.outcome, Outcome::Miss);
  EXPECT_EQ(f.set_ids, std::vector<std::uint32_t>{12});
  // Asking "hit or miss" is not an outcome filter.
  f = parse_query("does PC 0x10 hit or miss", kWorkloads, kPolicies);
  EXPECT_FALSE(f.outcome);
}

TEST(Retrieve, TupleSliceMatchesScan) {
  const auto& b = store().at(TraceKey("lbm", "parrot"));
  const auto& target = b.records[137];
  QueryFilters f;
  f.workload = "lbm";
  f.policy = "parrot";
  f.pcs = {target.program_counter};
  f.addresses = {target.memory_address};
  auto ctx = retrieve(store(), f);
  EXPECT_EQ(ctx.provenance.key.canonical_id(), "lbm_evictions_parrot");
  std::vector<std::size_t> expect;
  for (std::size_t i = 0; i < b.records.size(); ++i)
    if (b.records[i].program_counter == target.program_counter && b.records[i].memory_address == target.memory_address)
      expect.push_back(i);
  EXPECT_EQ(ctx.excerpt_indices, expect);
  ASSERT_EQ(ctx.trace_excerpt.size(), expect.size());
  for (std::size_t n = 0; n < expect.size(); ++n) EXPECT_EQ(ctx.trace_excerpt[n], b.records[expect[n]]);
  ASSERT_EQ(ctx.pc_context.size(), 1u);
  ASSERT_TRUE(ctx.pc_context[0].stats);
  EXPECT_EQ(ctx.pc_context[0].stats->accesses,
            static_cast<std::uint64_t>(std::count_if(b.records.begin(), b.records.end(), [&](const AccessRecord& r) {
              return r.program_counter == target.program_counter;
            })));
  EXPECT_EQ(ctx.metadata_summary, b.metadata);
}

TEST(Retrieve, UnknownPolicy) {
  QueryFilters f;
  f.workload = "lbm";
  f.policy = "foo";
  try {
    retrieve(store(), f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BundleNotFound);
  }
}

TEST(Retrieve, AmbiguousAndUnique) {
  QueryFilters f;
  f.workload = "lbm";
  try {
    retrieve(store(), f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AmbiguousBundle);
  }
  f.workload = "astar";  // one bundle only
  EXPECT_EQ(retrieve(store(), f).provenance.key, TraceKey("astar", "belady"));
}

TEST(Retrieve, PcPresentAddressAbsent) {
  const auto& b = store().at(TraceKey("mcf", "lru"));
  QueryFilters f;
  f.workload = "mcf";
  f.policy = "lru";
  f.pcs = {b.records[0].program_counter};
  f.addresses = {0xdead0000};
  auto ctx = retrieve(store(), f);
  EXPECT_TRUE(ctx.trace_excerpt.empty());
  ASSERT_EQ(ctx.pc_context.size(), 1u);
  EXPECT_TRUE(ctx.pc_context[0].stats);
  EXPECT_EQ(ctx.metadata_summary, b.metadata);
  const auto text = render_context(ctx);
  EXPECT_NE(text.find(fmt::format("{} for PC {}, address 0xdead0000.", kNotFoundSentinel,
                                  to_hex(b.records[0].program_counter))),
            std::string::npos);
}

TEST(Retrieve, AbsentPcIsReported) {
  QueryFilters f;
  f.workload = "mcf";
  f.policy = "lru";
  f.pcs = {0x777777};
  auto ctx = retrieve(store(), f);
  ASSERT_EQ(ctx.pc_context.size(), 1u);
  EXPECT_FALSE(ctx.pc_context[0].stats);
  EXPECT_NE(render_context(ctx).find("PC 0x777777 does not appear in this trace."), std::string::npos);
}

TEST(Retrieve, ExcerptCapTruncates) {
  const auto& b = store().at(TraceKey("mcf", "lru"));
  QueryFilters f;
  f.workload = "mcf";
  f.policy = "lru";
  f.pcs = {b.records[0].program_counter};
  auto ctx = retrieve(store(), f, 5);
  EXPECT_EQ(ctx.trace_excerpt.size(), 5u);
  EXPECT_TRUE(ctx.provenance.truncated());
  EXPECT_NE(render_context(ctx).find(fmt::format("Matching accesses: {} (showing first 5)",
                                                 ctx.provenance.matched_records)),
            std::string::npos);
}

TEST(Render, MissTupleCarriesVerdictAndEviction) {
  const auto& b = store().at(TraceKey("lbm", "lru"));
  std::size_t idx = 0;
  for (std::size_t i = 0; i < b.records.size(); ++i)
    if (b.records[i].evicted_address) {
      idx = i;
      break;
    }
  const auto& r = b.records[idx];
  QueryFilters f;
  f.workload = "lbm";
  f.policy = "lru";
  f.pcs = {r.program_counter};
  f.addresses = {r.memory_address};
  const auto text = render_context(retrieve(store(), f));
  EXPECT_NE(text.find(fmt::format("Access #{}: PC {}, address {}, set {} -> Cache result: Cache Miss", idx,
                                  to_hex(r.program_counter), to_hex(r.memory_address), r.cache_set_id)),
            std::string::npos);
  EXPECT_NE(text.find(fmt::format("Evicted {} (", to_hex(*r.evicted_address))), std::string::npos);
  EXPECT_EQ(text, render_context(retrieve(store(), f)));
}

TEST(Render, MissRateLineMatchesStats) {
  const auto& b = store().at(TraceKey("mcf", "parrot"));
  const auto pc = b.records[1].program_counter;
  const auto s = pc_stats(b.records, pc);
  const auto text = render_context(
      sieve_query(store(), fmt::format("What is the miss rate of PC {} in mcf under parrot?", to_hex(pc))));
  EXPECT_NE(text.find(fmt::format("The miss rate for PC {} is {:.2f}%.", to_hex(pc), s.miss_rate)),
            std::string::npos);
  EXPECT_NE(text.find(fmt::format("PC {} appeared {} times in this trace.", to_hex(pc), s.accesses)),
            std::string::npos);
  EXPECT_NE(text.find("Metadata: " + b.metadata), std::string::npos);
}

// Templated questions naming an exact tuple always retrieve that record.
TEST(SieveQuery, AnchoredRecallProperty) {
  std::mt19937_64 rng(41);
  for (const auto& key : store().keys()) {
    const auto& b = store().at(key);
    for (int n = 0; n < 50; ++n) {
      const auto idx = rng() % b.records.size();
      const auto& r = b.records[idx];
      const auto q = fmt::format("In the {} workload under the {} policy, does PC {} accessing address {} hit or miss?",
                                 key.workload(), key.policy(), to_hex(r.program_counter), to_hex(r.memory_address));
      const auto ctx = sieve_query(store(), q, 1000);
      EXPECT_EQ(ctx.provenance.key, key);
      EXPECT_NE(std::find(ctx.excerpt_indices.begin(), ctx.excerpt_indices.end(), idx), ctx.excerpt_indices.end())
          << q;
    }
  }
}

}  // namespace
}  // namespace cachescope
