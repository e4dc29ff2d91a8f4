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

#include "cachescope/service.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "cachescope/hex.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cachescope {

using ojson = nlohmann::ordered_json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidKey:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::ConfigError:
    case ErrorCode::FormatError:
    case ErrorCode::AmbiguousBundle:
    case ErrorCode::NotEnoughSets:
    case ErrorCode::EmptyTrace:
    case ErrorCode::NoMisses:
      return 400;
    case ErrorCode::BundleNotFound:
    case ErrorCode::PcNotFound:
    case ErrorCode::WorkloadNotFound:
    case ErrorCode::EmptyResult:
    case ErrorCode::SessionNotFound:
    case ErrorCode::RunNotFound:
      return 404;
    case ErrorCode::ClientError:
    case ErrorCode::ExhaustedRetries:
    case ErrorCode::JudgeError:
      return 502;
    case ErrorCode::IoError:
      return 500;
  }
  return 500;
}

std::string error_json(const Error& error) {
  ojson e;
  e["code"] = to_string(error.code());
  e["message"] = error.what();
  if (error.position()) e["position"] = *error.position();
  if (const auto* ex = dynamic_cast<const ExhaustedRetries*>(&error)) {
    e["transcript"] = ojson::array();
    for (const auto& a : ex->transcript()) {
      // Snippets only; completions can be long.
      e["transcript"].push_back({{"generated", a.generated.substr(0, 400)},
                                 {"code", to_string(a.code)},
                                 {"error", a.error.substr(0, 400)}});
    }
  }
  return ojson{{"error", e}}.dump();
}

namespace {

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson pc_stats_object(const PcStats& s) {
  ojson j;
  j["pc"] = to_hex(s.pc);
  j["accesses"] = s.accesses;
  j["hits"] = s.hits;
  j["misses"] = s.misses;
  j["miss_rate"] = s.miss_rate;
  j["hit_rate"] = s.hit_rate();
  j["reused_accesses"] = s.reused_accesses;
  j["mean_reuse_distance"] = optional_number(s.mean_reuse_distance);
  j["std_reuse_distance"] = optional_number(s.std_reuse_distance);
  j["mean_evicted_reuse_distance"] = optional_number(s.mean_evicted_reuse_distance);
  j["eviction_count"] = s.eviction_count;
  j["wrong_evictions"] = s.wrong_evictions;
  j["wrong_eviction_pct"] = s.wrong_eviction_pct;
  return j;
}

ojson set_list(const std::vector<SetStats>& sets) {
  ojson a = ojson::array();
  for (const auto& s : sets)
    a.push_back({{"set_id", s.set_id}, {"accesses", s.accesses}, {"hits", s.hits}, {"hit_rate", s.hit_rate}});
  return a;
}

ojson parse_body(const httplib::Request& req) {
  if (req.body.empty()) return ojson::object();
  try {
    auto j = ojson::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "request body must be a JSON object");
    return j;
  } catch (const ojson::parse_error& e) {
    throw Error(ErrorCode::SchemaError, fmt::format("request body is not JSON: {}", e.what()));
  }
}

void send(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

RetrieverChoice retriever_field(const ojson& body, const char* field, RetrieverChoice fallback) {
  if (!body.contains(field)) return fallback;
  if (!body[field].is_string()) throw Error(ErrorCode::SchemaError, fmt::format("\"{}\" must be a string", field));
  auto r = parse_retriever(body[field].get<std::string>());
  if (!r) throw Error(ErrorCode::SchemaError, fmt::format("unknown retriever '{}'", body[field].get<std::string>()));
  return *r;
}

int shots_field(const ojson& body, int fallback) {
  if (!body.contains("shots")) return fallback;
  if (!body["shots"].is_number_integer()) throw Error(ErrorCode::SchemaError, "\"shots\" must be 0, 1 or 3");
  const int s = body["shots"].get<int>();
  if (s != 0 && s != 1 && s != 3) throw Error(ErrorCode::SchemaError, "\"shots\" must be 0, 1 or 3");
  return s;
}

}  // namespace

std::string pc_stats_json(const PcStats& stats) { return pc_stats_object(stats).dump(); }

std::string set_hotness_json(const SetHotness& h) {
  return ojson{{"hot", set_list(h.hot)}, {"cold", set_list(h.cold)}}.dump();
}

struct Service::Impl {
  struct Session {
    std::mutex mutex;  // one message at a time per session
    ConversationMemory memory;
    RetrieverChoice retriever;
    int shots;
    std::chrono::steady_clock::time_point last_used;
  };
  struct BenchRun {
    std::string status = "running";
    std::string report;  // JSON once done
    std::string error;
  };

  const TraceStore& store;
  ServiceClients clients;
  ServiceConfig config;
  httplib::Server server;
  std::thread server_thread;

  mutable std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::uint64_t next_session = 1;

  std::mutex runs_mutex;
  std::map<std::string, BenchRun> runs;
  std::vector<std::thread> run_threads;
  std::uint64_t next_run = 1;

  Impl(const TraceStore& s, ServiceClients c, ServiceConfig cfg) : store(s), clients(c), config(std::move(cfg)) {
    if (!clients.answer) throw Error(ErrorCode::ConfigError, "the service needs an answer client");
    if (!clients.program) clients.program = clients.answer;
    routes();
  }

  ~Impl() {
    server.stop();
    if (server_thread.joinable()) server_thread.join();
    for (auto& t : run_threads) t.join();
  }

  template <typename F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      send(res, http_status(e.code()), error_json(e));
    } catch (const std::exception& e) {
      send(res, 500, ojson{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump());
    }
  }

  void expire_sessions() {
    const auto now = std::chrono::steady_clock::now();
    std::lock_guard lock(sessions_mutex);
    for (auto it = sessions.begin(); it != sessions.end();) {
      std::unique_lock busy(it->second->mutex, std::try_to_lock);
      if (busy && now - it->second->last_used > config.idle_timeout) it = sessions.erase(it);
      else ++it;
    }
  }

  std::shared_ptr<Session> session(const std::string& id) {
    expire_sessions();
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorCode::SessionNotFound, fmt::format("no session '{}'", id));
    return it->second;
  }

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        auto s = std::make_shared<Session>();
        s->memory = ConversationMemory(config.memory);
        s->retriever = retriever_field(body, "retriever", config.retriever);
        s->shots = shots_field(body, config.shots);
        s->last_used = std::chrono::steady_clock::now();
        expire_sessions();
        std::string id;
        {
          std::lock_guard lock(sessions_mutex);
          id = fmt::format("s{}", next_session++);
          sessions.emplace(id, s);
        }
        send(res, 201,
             ojson{{"id", id}, {"retriever", to_string(s->retriever)}, {"shots", s->shots}}.dump());
      });
    });

    server.Post(R"(/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto s = session(req.matches[1]);
        const auto body = parse_body(req);
        if (!body.contains("text") || !body["text"].is_string() || body["text"].get<std::string>().empty())
          throw Error(ErrorCode::SchemaError, "\"text\" must be a non-empty string");
        const auto text = body["text"].get<std::string>();
        std::lock_guard lock(s->mutex);
        s->last_used = std::chrono::steady_clock::now();
        const auto choice = retriever_field(body, "retriever", s->retriever);
        auto retrieval =
            retrieve_evidence(store, text, choice, *clients.program, config.max_retries, config.excerpt_cap);
        auto a = answer(text, retrieval.evidence, s->memory, *clients.answer, s->shots);
        s->last_used = std::chrono::steady_clock::now();
        ojson out;
        out["answer"] = a.text;
        out["evidence"] = retrieval.evidence.text;
        out["provenance"] = ojson::parse(a.provenance);
        out["retriever_used"] = retrieval.retriever_used;
        out["attempts"] = retrieval.attempts;
        out["program"] = retrieval.program ? ojson(*retrieval.program) : ojson(nullptr);
        send(res, 200, out.dump());
      });
    });

    server.Get("/traces", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        ojson list = ojson::array();
        for (const auto& k : store.keys()) {
          const auto& b = store.at(k);
          list.push_back({{"key", k.canonical_id()},
                          {"workload", k.workload()},
                          {"policy", k.policy()},
                          {"records", b.records.size()},
                          {"metadata", b.metadata}});
        }
        send(res, 200, ojson{{"traces", list}}.dump());
      });
    });

    server.Get(R"(/traces/([^/]+)/stats)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto& b = store.at(TraceKey::parse(req.matches[1].str()));
        if (!req.has_param("pc")) {
          ojson list = ojson::array();
          for (const auto& s : all_pc_stats(b.records)) list.push_back(pc_stats_object(s));
          send(res, 200, ojson{{"key", b.key.canonical_id()}, {"pcs", list}}.dump());
          return;
        }
        const auto text = req.get_param_value("pc");
        const auto pc = parse_hex(text);
        if (!pc) throw Error(ErrorCode::SchemaError, fmt::format("pc '{}' is not 0x-prefixed hex", text));
        send(res, 200, pc_stats_json(pc_stats(b.records, *pc)));
      });
    });

    server.Get(R"(/traces/([^/]+)/sets)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto& b = store.at(TraceKey::parse(req.matches[1].str()));
        std::size_t k = 5;
        if (req.has_param("k")) {
          const auto v = req.get_param_value("k");
          if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || v.size() > 6 || std::stoul(v) == 0)
            throw Error(ErrorCode::SchemaError, fmt::format("k '{}' must be a positive integer", v));
          k = std::stoul(v);
        }
        send(res, 200, set_hotness_json(set_hotness(b.records, k)));
      });
    });

    server.Post("/bench/runs", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        QuestionSuite suite;
        if (body.contains("questions")) {
          if (!body["questions"].is_array()) throw Error(ErrorCode::SchemaError, "\"questions\" must be an array");
          std::string jsonl;
          for (const auto& q : body["questions"]) jsonl += q.dump() + "\n";
          std::istringstream in(jsonl);
          suite = parse_questions(in, "request");
        } else if (body.contains("questions_path") && body["questions_path"].is_string()) {
          suite = load_questions(body["questions_path"].get<std::string>());
        } else {
          throw Error(ErrorCode::SchemaError, "give \"questions\" (array) or \"questions_path\"");
        }
        PipelineConfig cfg;
        cfg.retriever = retriever_field(body, "retriever", config.retriever);
        cfg.shots = shots_field(body, config.shots);
        cfg.answer_client = clients.answer;
        cfg.program_client = clients.program;
        cfg.judge = clients.judge;
        cfg.max_retries = config.max_retries;
        cfg.excerpt_cap = config.excerpt_cap;
        std::string id;
        {
          std::lock_guard lock(runs_mutex);
          id = fmt::format("r{}", next_run++);
          runs[id] = BenchRun{};
          run_threads.emplace_back([this, id, cfg, questions = std::move(suite.questions)] {
            BenchRun done;
            try {
              done.report = report_to_json(run_bench(store, cfg, questions));
              done.status = "done";
            } catch (const std::exception& e) {
              done.status = "failed";
              done.error = e.what();
            }
            std::lock_guard lock(runs_mutex);
            runs[id] = std::move(done);
          });
        }
        send(res, 202, ojson{{"id", id}, {"status", "running"}}.dump());
      });
    });

    server.Get(R"(/bench/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::lock_guard lock(runs_mutex);
        auto it = runs.find(req.matches[1]);
        if (it == runs.end())
          throw Error(ErrorCode::RunNotFound, fmt::format("no bench run '{}'", req.matches[1].str()));
        ojson out{{"id", it->first}, {"status", it->second.status}};
        if (it->second.status == "done") out["report"] = ojson::parse(it->second.report);
        if (!it->second.error.empty()) out["error"] = it->second.error;
        send(res, 200, out.dump());
      });
    });
  }

  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::IoError, fmt::format("cannot bind {}:{}", host, port));
    return bound;
  }
};

Service::Service(const TraceStore& store, ServiceClients clients, ServiceConfig config)
    : impl_(std::make_unique<Impl>(store, clients, std::move(config))) {}

Service::~Service() = default;

int Service::start(const std::string& host, int port) {
  const int bound = impl_->bind(host, port);
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  impl_->bind(host, port);
  impl_->server.listen_after_bind();
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

std::size_t Service::session_count() const {
  std::lock_guard lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

}  // namespace cachescope
