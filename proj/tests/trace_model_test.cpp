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

#include <fstream>
#include <random>
#include <sstream>

#include "cachescope/errors.hpp"
#include "cachescope/simulator.hpp"
#include "cachescope/trace_model.hpp"
#include "oracles.hpp"

namespace cachescope {
namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::IoError;
}

TraceBundle small_bundle(std::string workload, std::string policy_name, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto t = oracle::random_trace(rng, 120, 12);
  CacheConfig c;
  c.num_sets = 4;
  c.ways = 2;
  SimulateOptions o;
  o.workload = std::move(workload);
  o.workload_description = "synthetic test workload";
  return simulate(t, c, parse_policy(policy_name, seed), o);
}

TEST(TraceKey, CanonicalForm) {
  TraceKey k("mcf", "lru");
  EXPECT_EQ(k.canonical_id(), "mcf_evictions_lru");
  EXPECT_EQ(TraceKey::parse("mcf_evictions_lru"), k);
  EXPECT_EQ(TraceKey::parse("astar_evictions_parrot").policy(), "parrot");
}

TEST(TraceKey, Rejections) {
  EXPECT_EQ(code_of([] { TraceKey("", "lru"); }), ErrorCode::InvalidKey);
  EXPECT_EQ(code_of([] { TraceKey("mcf", ""); }), ErrorCode::InvalidKey);
  EXPECT_EQ(code_of([] { TraceKey("MCF", "lru"); }), ErrorCode::InvalidKey);
  EXPECT_EQ(code_of([] { TraceKey("a-b", "lru"); }), ErrorCode::InvalidKey);
  EXPECT_EQ(code_of([] { TraceKey("x_evictions", "lru"); }), ErrorCode::InvalidKey);
  EXPECT_EQ(code_of([] { TraceKey::parse("mcf_lru"); }), ErrorCode::InvalidKey);
  EXPECT_EQ(code_of([] { TraceKey::parse("_evictions_lru"); }), ErrorCode::InvalidKey);
}

TEST(TraceKey, RoundTripProperty) {
  std::mt19937_64 rng(3);
  const std::string alpha = "abcdefghijklmnopqrstuvwxyz0123456789_";
  auto ident = [&] {
    std::string s;
    const auto len = 1 + rng() % 12;
    for (std::size_t i = 0; i < len; ++i) s += alpha[rng() % alpha.size()];
    return s;
  };
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    auto w = ident(), p = ident();
    if (w.find("_evictions") != std::string::npos) continue;
    // Policies may contain the infix themselves.
    if (i % 10 == 0) p += "_evictions_x";
    TraceKey k(w, p);
    ASSERT_EQ(TraceKey::parse(k.canonical_id()), k) << k.canonical_id();
    ++checked;
  }
  EXPECT_GT(checked, 1900);
}

TEST(Outcome, Strings) {
  EXPECT_EQ(to_string(Outcome::Miss), "Cache Miss");
  EXPECT_EQ(parse_outcome("Cache Hit"), Outcome::Hit);
  EXPECT_FALSE(parse_outcome("hit"));
  EXPECT_EQ(parse_miss_type("Conflict"), MissType::Conflict);
  EXPECT_FALSE(parse_miss_type("conflict"));
}

TEST(AccessRecord, TextViews) {
  AccessRecord r;
  EXPECT_EQ(r.accessed_address_recency(), "first access to this address");
  EXPECT_EQ(r.accessed_address_reuse_distance(), "never needed again");
  EXPECT_EQ(r.evicted_address_reuse_distance(), "");
  r.accessed_address_recency_numeric = 12;
  r.accessed_address_reuse_distance_numeric = 3132;
  r.evicted_address = 0x10;
  r.evicted_address_reuse_distance_numeric = 2304;
  EXPECT_EQ(r.accessed_address_recency(), "last accessed 12 accesses ago");
  EXPECT_EQ(r.accessed_address_reuse_distance(), "needed again in 3132 accesses");
  EXPECT_EQ(r.evicted_address_reuse_distance(), "needed again in 2304 accesses");
}

TEST(TraceStore, PutAndReplace) {
  TraceStore store;
  EXPECT_TRUE(store.empty());
  store.put_bundle(small_bundle("mcf", "lru", 1));
  store.put_bundle(small_bundle("mcf", "belady", 1));
  store.put_bundle(small_bundle("astar", "lru", 2));
  EXPECT_EQ(store.size(), 3u);
  EXPECT_EQ(store.workloads(), (std::vector<std::string>{"astar", "mcf"}));
  EXPECT_EQ(store.policies(), (std::vector<std::string>{"belady", "lru"}));
  EXPECT_EQ(store.bundles_for_workload("mcf").size(), 2u);
  EXPECT_TRUE(store.bundles_for_workload("lbm").empty());

  auto replacement = small_bundle("mcf", "lru", 9);
  store.put_bundle(replacement);
  EXPECT_EQ(store.size(), 3u);
  EXPECT_EQ(store.at(TraceKey("mcf", "lru")), replacement);
  EXPECT_NE(store.find("mcf_evictions_belady"), nullptr);
  EXPECT_EQ(store.find("nope"), nullptr);
  EXPECT_EQ(code_of([&] { store.at(TraceKey("lbm", "lru")); }), ErrorCode::BundleNotFound);
  EXPECT_EQ(code_of([&] { store.put_bundle(TraceBundle{}); }), ErrorCode::InvalidKey);
}

TEST(TraceStore, LookupIndexMatchesScan) {
  TraceStore store;
  auto b = small_bundle("mcf", "lru", 5);
  store.put_bundle(b);
  const TraceKey k("mcf", "lru");
  for (const auto& r : b.records) {
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < b.records.size(); ++i)
      if (b.records[i].program_counter == r.program_counter &&
          b.records[i].memory_address == r.memory_address)
        expect.push_back(i);
    auto got = store.lookup(k, r.program_counter, r.memory_address);
    ASSERT_EQ(std::vector<std::size_t>(got.begin(), got.end()), expect);
  }
  EXPECT_TRUE(store.lookup(k, 0x1, 0x2).empty());
  EXPECT_TRUE(store.lookup(TraceKey("x", "y"), 0x1, 0x2).empty());
}

TEST(Slice, FiltersConjunctionAndDisjunction) {
  auto b = small_bundle("mcf", "lru", 4);
  const Address pc = b.records[0].program_counter;
  QueryFilters f;
  f.pcs = {pc};
  f.outcome = Outcome::Miss;
  auto out = slice(b.records, f);
  std::size_t expect = 0;
  for (const auto& r : b.records) expect += r.program_counter == pc && r.is_miss();
  EXPECT_EQ(out.size(), expect);
  for (const auto& r : out) {
    EXPECT_EQ(r.program_counter, pc);
    EXPECT_TRUE(r.is_miss());
  }
  // Idempotent.
  EXPECT_EQ(slice(out, f), out);
  // Empty filters keep everything.
  EXPECT_EQ(slice(b.records, QueryFilters{}), b.records);
  // Unknown PC selects nothing.
  QueryFilters none;
  none.pcs = {0xdead};
  EXPECT_TRUE(slice(b.records, none).empty());
  // Disjunction within a list.
  QueryFilters two;
  two.set_ids = {0, 1};
  for (const auto& r : slice(b.records, two)) EXPECT_LE(r.cache_set_id, 1u);
  EXPECT_FALSE(QueryFilters{}.anchored());
  EXPECT_TRUE(f.anchored());
  EXPECT_EQ(f.describe(), "program_counter == " + to_hex(pc) + ", evict == Cache Miss");
}

TEST(Persistence, StoreRoundTrip) {
  TraceStore store;
  store.put_bundle(small_bundle("mcf", "lru", 1));
  store.put_bundle(small_bundle("mcf", "belady", 1));
  store.put_bundle(small_bundle("astar", "random", 2));
  auto dir = oracle::temp_dir("store");
  save_store(store, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "mcf_evictions_lru" / "records.jsonl"));
  EXPECT_TRUE(load_store(dir) == store);
  std::filesystem::remove_all(dir);
}

TEST(Persistence, RandomizedRecordRoundTrip) {
  std::mt19937_64 rng(23);
  for (int iter = 0; iter < 50; ++iter) {
    auto b = small_bundle("w", iter % 2 ? "lru" : "belady", rng());
    b.records[0].function_name = "f\"quoted\"\n\ttabbed \\ unicode \xc3\xa9";
    b.records[0].assembly_code = "mov eax, [rbp-0x8]\nret";
    std::stringstream ss;
    write_records_jsonl(b.records, ss);
    ASSERT_EQ(read_records_jsonl(ss), b.records);
  }
}

TEST(Persistence, TruncatedFileFails) {
  auto b = small_bundle("mcf", "lru", 8);
  auto dir = oracle::temp_dir("trunc");
  save_bundle(b, dir);
  const auto path = dir / "mcf_evictions_lru" / "records.jsonl";
  std::string content;
  {
    std::ifstream in(path, std::ios::binary);
    content.assign(std::istreambuf_iterator<char>(in), {});
  }
  // Cut mid-record: malformed JSON with a byte offset.
  const std::size_t cut = content.size() - 40;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content.substr(0, cut);
  }
  try {
    load_bundle(dir / "mcf_evictions_lru");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormatError);
    ASSERT_TRUE(e.position());
    EXPECT_LE(*e.position(), cut);
    EXPECT_GT(*e.position(), content.rfind('\n', content.size() - 2));
  }
  // Cut at a line boundary: caught by the metadata cross-check.
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content.substr(0, content.rfind('\n', content.size() - 2) + 1);
  }
  EXPECT_EQ(code_of([&] { load_bundle(dir / "mcf_evictions_lru"); }), ErrorCode::FormatError);
  std::filesystem::remove_all(dir);
}

TEST(Persistence, ExtraColumnPreserved) {
  auto b = small_bundle("mcf", "lru", 6);
  auto line = record_to_json(b.records[0]);
  line.insert(line.size() - 1, R"(,"prefetch_hint":{"level":2})");
  std::stringstream ss(line + "\n");
  auto recs = read_records_jsonl(ss);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].extensions.at("prefetch_hint"), R"({"level":2})");
  std::stringstream again;
  write_records_jsonl(recs, again);
  EXPECT_NE(again.str().find(R"("prefetch_hint":{"level":2})"), std::string::npos);
  EXPECT_EQ(read_records_jsonl(again), recs);
}

TEST(Persistence, InconsistentRecordRejected) {
  auto b = small_bundle("mcf", "lru", 6);
  AccessRecord hit;
  for (const auto& r : b.records)
    if (!r.is_miss()) hit = r;
  hit.evicted_address = 0x40;  // hits never evict
  std::stringstream ss(record_to_json(hit) + "\n");
  EXPECT_EQ(code_of([&] { read_records_jsonl(ss); }), ErrorCode::FormatError);
}

TEST(Persistence, MissingStoreIsIoError) {
  EXPECT_EQ(code_of([] { load_store("/nonexistent/cachescope"); }), ErrorCode::IoError);
}

TEST(Persistence, CsvExport) {
  auto b = small_bundle("mcf", "lru", 2);
  b.records[0].function_name = "a,b \"c\"";
  std::stringstream ss;
  export_csv(b, ss);
  std::string header, first;
  std::getline(ss, header);
  std::getline(ss, first);
  EXPECT_EQ(header.rfind("program_counter,memory_address,cache_set_id,evict", 0), 0u);
  EXPECT_NE(first.find("\"a,b \"\"c\"\"\""), std::string::npos) << first;
  std::size_t lines = 2;
  for (std::string l; std::getline(ss, l);) ++lines;
  EXPECT_EQ(lines, b.records.size() + 1);
}

}  // namespace
}  // namespace cachescope
