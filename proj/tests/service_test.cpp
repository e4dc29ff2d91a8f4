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

#include <chrono>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cachescope/errors.hpp"
#include "cachescope/hex.hpp"
#include "cachescope/ranger.hpp"
#include "cachescope/service.hpp"
#include "cachescope/simulator.hpp"
#include "cachescope/stats.hpp"
#include "cachescope/workloads.hpp"

namespace cachescope {
namespace {

using json = nlohmann::json;

const TraceStore& store() {
  static const TraceStore s = [] {
    TraceStore st;
    CacheConfig c;
    c.num_sets = 8;
    c.ways = 2;
    auto t = workloads::mixed(500, 32, 4);
    for (const char* p : {"lru", "belady"}) {
      SimulateOptions o;
      o.workload = "mcf";
      st.put_bundle(simulate(t.accesses, c, parse_policy(p), o));
    }
    return st;
  }();
  return s;
}

// Two distinct PCs from the lru bundle.
std::pair<Address, Address> two_pcs() {
  const auto all = all_pc_stats(store().at(TraceKey("mcf", "lru")).records);
  return {all.at(0).pc, all.at(1).pc};
}

struct Running {
  explicit Running(ServiceClients clients, ServiceConfig cfg = {}) : service(store(), clients, cfg) {
    port = service.start("127.0.0.1", 0);
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  json post(const std::string& path, const json& body, int want) {
    auto r = client->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, want) << path << " " << r->body;
    return json::parse(r->body);
  }
  json get(const std::string& path, int want) {
    auto r = client->Get(path);
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, want) << path << " " << r->body;
    return json::parse(r->body);
  }
  Service service;
  int port = 0;
  std::unique_ptr<httplib::Client> client;
};

TEST(Service, StatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::ParseError), 400);
  EXPECT_EQ(http_status(ErrorCode::PcNotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::SessionNotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::ClientError), 502);
  EXPECT_EQ(http_status(ErrorCode::IoError), 500);
  const auto j = json::parse(error_json(Error(ErrorCode::ParseError, "bad token", 7)));
  EXPECT_EQ(j["error"]["code"], "ParseError");
  EXPECT_EQ(j["error"]["position"], 7);
}

TEST(Service, SessionMessageFlow) {
  GroundedEchoClient echo;
  TemplateProgramClient programs(store());
  Running svc({&echo, &programs, nullptr});
  const auto s = svc.post("/sessions", json::object(), 201);
  EXPECT_EQ(s["retriever"], "auto");
  const auto id = s["id"].get<std::string>();
  EXPECT_EQ(svc.service.session_count(), 1u);

  const auto pc = to_hex(two_pcs().first);
  auto m = svc.post(fmt::format("/sessions/{}/messages", id),
                    {{"text", fmt::format("What is the miss rate for PC {} in mcf under lru?", pc)}}, 200);
  EXPECT_EQ(m["retriever_used"], "sieve");
  EXPECT_TRUE(m["program"].is_null());
  EXPECT_EQ(m["provenance"]["trace"], "mcf_evictions_lru");
  EXPECT_NE(m["answer"].get<std::string>().find(pc), std::string::npos);

  m = svc.post(fmt::format("/sessions/{}/messages", id),
               {{"text", "List the unique PCs in mcf under lru"}, {"retriever", "ranger"}}, 200);
  EXPECT_EQ(m["retriever_used"], "ranger");
  ASSERT_TRUE(m["program"].is_string());
  EXPECT_NE(m["program"].get<std::string>().find("group_by program_counter"), std::string::npos);
  EXPECT_NE(m["evidence"].get<std::string>().find(m["program"].get<std::string>()), std::string::npos);
  EXPECT_NE(m["evidence"].get<std::string>().find(pc), std::string::npos) << m["evidence"];
  EXPECT_NE(m["answer"].get<std::string>().find("Result:"), std::string::npos) << m["answer"];
}

TEST(Service, ErrorStatuses) {
  GroundedEchoClient echo;
  Running svc({&echo, nullptr, nullptr});
  const auto absent = svc.get("/traces/mcf_evictions_lru/stats?pc=0x4fffff", 404);
  EXPECT_EQ(absent["error"]["code"], "PcNotFound");
  EXPECT_EQ(svc.get("/traces/gcc_evictions_lru/stats?pc=0x1", 404)["error"]["code"], "BundleNotFound");
  EXPECT_EQ(svc.get("/traces/mcf_evictions_lru/stats?pc=zzz", 400)["error"]["code"], "SchemaError");
  EXPECT_EQ(svc.get("/traces/mcf_evictions_lru/sets?k=0", 400)["error"]["code"], "SchemaError");
  EXPECT_EQ(svc.post("/sessions/s99/messages", {{"text", "hi"}}, 404)["error"]["code"], "SessionNotFound");
  EXPECT_EQ(svc.get("/bench/runs/r42", 404)["error"]["code"], "RunNotFound");

  const auto id = svc.post("/sessions", {{"retriever", "sieve"}}, 201)["id"].get<std::string>();
  svc.post(fmt::format("/sessions/{}/messages", id), {{"nottext", 1}}, 400);
  svc.post("/sessions", {{"retriever", "oracle"}}, 400);
  auto raw = svc.client->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(raw);
  EXPECT_EQ(raw->status, 400);
}

TEST(Service, ModelFailureIs502) {
  ScriptedClient none({});
  Running svc({&none, nullptr, nullptr});
  const auto id = svc.post("/sessions", {{"retriever", "sieve"}}, 201)["id"].get<std::string>();
  const auto pc = to_hex(two_pcs().first);
  const auto e = svc.post(fmt::format("/sessions/{}/messages", id),
                          {{"text", fmt::format("miss rate for PC {} in mcf under lru", pc)}}, 502);
  EXPECT_EQ(e["error"]["code"], "ClientError");
}

// A fact said in one session never reaches another session's prompt.
TEST(Service, SessionsAreIsolated) {
  ScriptedClient scripted({"reply-one", "reply-two", "reply-three", "reply-four"});
  Running svc({&scripted, nullptr, nullptr});
  const auto [a, b] = two_pcs();
  const auto s1 = svc.post("/sessions", {{"retriever", "sieve"}}, 201)["id"].get<std::string>();
  const auto s2 = svc.post("/sessions", {{"retriever", "sieve"}}, 201)["id"].get<std::string>();
  ASSERT_NE(s1, s2);
  svc.post(fmt::format("/sessions/{}/messages", s1), {{"text", fmt::format("mcf lru PC {} miss rate, asks kestrel", to_hex(a))}}, 200);
  svc.post(fmt::format("/sessions/{}/messages", s2), {{"text", fmt::format("mcf lru PC {} miss rate, asks heron", to_hex(b))}}, 200);
  svc.post(fmt::format("/sessions/{}/messages", s2), {{"text", fmt::format("mcf lru PC {} count", to_hex(b))}}, 200);
  svc.post(fmt::format("/sessions/{}/messages", s1), {{"text", fmt::format("mcf lru PC {} count", to_hex(a))}}, 200);

  const auto got = scripted.received();
  ASSERT_EQ(got.size(), 4u);
  auto joined = [](const std::vector<ChatMessage>& msgs) {
    std::string s;
    for (const auto& m : msgs) s += m.content + "\n";
    return s;
  };
  // Evidence can name other PCs, so the markers are words only one session uses.
  EXPECT_EQ(joined(got[1]).find("kestrel"), std::string::npos);
  EXPECT_EQ(joined(got[2]).find("kestrel"), std::string::npos);
  EXPECT_EQ(joined(got[2]).find("reply-one"), std::string::npos);
  EXPECT_NE(joined(got[2]).find("reply-two"), std::string::npos);  // its own history
  EXPECT_NE(joined(got[2]).find("heron"), std::string::npos);
  EXPECT_NE(joined(got[3]).find("reply-one"), std::string::npos);
  EXPECT_NE(joined(got[3]).find("kestrel"), std::string::npos);
  EXPECT_EQ(joined(got[3]).find("heron"), std::string::npos);
  EXPECT_EQ(joined(got[3]).find("reply-t"), std::string::npos);
}

TEST(Service, IdleSessionsExpire) {
  GroundedEchoClient echo;
  ServiceConfig cfg;
  cfg.idle_timeout = std::chrono::seconds(0);
  Running svc({&echo, nullptr, nullptr}, cfg);
  const auto id = svc.post("/sessions", json::object(), 201)["id"].get<std::string>();
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  svc.post(fmt::format("/sessions/{}/messages", id), {{"text", "hello"}}, 404);
}

TEST(Service, TracesAndSets) {
  GroundedEchoClient echo;
  Running svc({&echo, nullptr, nullptr});
  const auto t = svc.get("/traces", 200);
  ASSERT_EQ(t["traces"].size(), 2u);
  EXPECT_EQ(t["traces"][0]["key"], "mcf_evictions_belady");
  EXPECT_EQ(t["traces"][0]["records"], 500);

  const auto& b = store().at(TraceKey("mcf", "lru"));
  const auto pc = two_pcs().first;
  const auto st = svc.get(fmt::format("/traces/mcf_evictions_lru/stats?pc={}", to_hex(pc)), 200);
  std::size_t n = 0, misses = 0;
  for (const auto& r : b.records)
    if (r.program_counter == pc) {
      ++n;
      misses += r.is_miss();
    }
  EXPECT_EQ(st["accesses"], n);
  EXPECT_EQ(st["misses"], misses);
  EXPECT_EQ(st["pc"], to_hex(pc));

  const auto all = svc.get("/traces/mcf_evictions_lru/stats", 200);
  EXPECT_EQ(all["pcs"].size(), all_pc_stats(b.records).size());

  const auto sets = svc.get("/traces/mcf_evictions_lru/sets?k=3", 200);
  EXPECT_EQ(sets["hot"].size(), 3u);
  EXPECT_EQ(sets["cold"].size(), 3u);
  EXPECT_EQ(sets.dump(), json::parse(set_hotness_json(set_hotness(b.records, 3))).dump());
}

TEST(Service, BenchRunPolls) {
  GroundedEchoClient echo;
  Running svc({&echo, nullptr, nullptr});
  const auto& b = store().at(TraceKey("mcf", "lru"));
  const auto& r = b.records.at(0);
  json q{{"id", "q1"},
         {"tier", "TG"},
         {"category", "Count"},
         {"text", fmt::format("How many times did PC {} appear in mcf under lru?", to_hex(r.program_counter))},
         {"expected", {{"kind", "numeric"}, {"value", pc_stats(b.records, r.program_counter).accesses}}}};
  const auto started = svc.post("/bench/runs", {{"questions", json::array({q})}, {"retriever", "sieve"}}, 202);
  const auto id = started["id"].get<std::string>();
  json run;
  for (int i = 0; i < 200; ++i) {
    run = svc.get("/bench/runs/" + id, 200);
    if (run["status"] != "running") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ASSERT_EQ(run["status"], "done");
  EXPECT_EQ(run["report"]["tg_total"], 100.0);
  EXPECT_EQ(run["report"]["results"][0]["score"], 1);

  svc.post("/bench/runs", {{"questions", json::array({{{"id", "x"}}})}}, 400);
}

}  // namespace
}  // namespace cachescope
