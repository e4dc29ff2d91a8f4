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

// cachescope command-line front end. Exit codes: 0 success, 1 a module error
// (JSON on stderr), 2 bad usage.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "cachescope/bench.hpp"
#include "cachescope/errors.hpp"
#include "cachescope/fixtures.hpp"
#include "cachescope/generator.hpp"
#include "cachescope/hex.hpp"
#include "cachescope/ingest.hpp"
#include "cachescope/model_client.hpp"
#include "cachescope/ranger.hpp"
#include "cachescope/service.hpp"
#include "cachescope/simulator.hpp"
#include "cachescope/stats.hpp"
#include "json.hpp"

using namespace cachescope;
using ojson = nlohmann::ordered_json;

namespace {

/// Flag, then environment variable, then config file key, then default.
struct Settings {
  std::string config_path;
  nlohmann::json file;

  void load() {
    if (config_path.empty()) {
      if (const char* env = std::getenv("CACHESCOPE_CONFIG")) config_path = env;
    }
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read config {}", config_path));
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, fmt::format("{}: {}", config_path, e.what()));
    }
    if (!file.is_object()) throw Error(ErrorCode::ConfigError, fmt::format("{}: expected an object", config_path));
  }

  std::string get(const CLI::Option* flag, const std::string& flag_value, const char* env, const char* key,
                  std::string fallback = {}) const {
    if (flag && flag->count() > 0) return flag_value;
    if (env) {
      if (const char* v = std::getenv(env); v && *v) return v;
    }
    if (file.contains(key)) {
      const auto& v = file[key];
      return v.is_string() ? v.get<std::string>() : v.dump();
    }
    return fallback;
  }
};

struct ModelOptions {
  std::string client = "mock";
  std::string script;
  std::string program_script;
  std::string base_url, model, api_key;
  CLI::Option *client_opt = nullptr, *base_url_opt = nullptr, *model_opt = nullptr, *api_key_opt = nullptr;

  void add(CLI::App* cmd) {
    client_opt = cmd->add_option("--client", client, "mock (grounded echo + template programs), scripted or live")
                     ->check(CLI::IsMember({"mock", "scripted", "live"}));
    cmd->add_option("--script", script, "JSONL completions for --client scripted");
    cmd->add_option("--program-script", program_script, "separate JSONL completions for query programs");
    base_url_opt = cmd->add_option("--base-url", base_url, "chat-completions endpoint root");
    model_opt = cmd->add_option("--model", model, "model id");
    api_key_opt = cmd->add_option("--api-key", api_key, "bearer token");
  }
};

struct Clients {
  std::unique_ptr<ModelClient> answer;
  std::unique_ptr<ModelClient> program;
  ModelClient* program_or_answer() { return program ? program.get() : answer.get(); }
};

HttpClientConfig http_config(const ModelOptions& m, const Settings& s) {
  HttpClientConfig c;
  c.base_url = s.get(m.base_url_opt, m.base_url, "CACHESCOPE_BASE_URL", "base_url");
  c.model = s.get(m.model_opt, m.model, "CACHESCOPE_MODEL", "model");
  c.api_key = s.get(m.api_key_opt, m.api_key, "CACHESCOPE_API_KEY", "api_key");
  c.embed_model = s.get(nullptr, "", "CACHESCOPE_EMBED_MODEL", "embed_model");
  if (c.base_url.empty() || c.model.empty())
    throw Error(ErrorCode::ConfigError, "--client live needs a base URL and a model (flags, environment or config)");
  return c;
}

Clients make_clients(const ModelOptions& m, const Settings& s, const TraceStore& store) {
  Clients c;
  const auto kind = s.get(m.client_opt, m.client, "CACHESCOPE_CLIENT", "client", "mock");
  if (kind == "mock") {
    c.answer = std::make_unique<GroundedEchoClient>();
    c.program = std::make_unique<TemplateProgramClient>(store);
  } else if (kind == "scripted") {
    if (m.script.empty()) throw Error(ErrorCode::ConfigError, "--client scripted needs --script");
    c.answer = std::make_unique<ScriptedClient>(ScriptedClient::read_responses(m.script));
    if (!m.program_script.empty())
      c.program = std::make_unique<ScriptedClient>(ScriptedClient::read_responses(m.program_script));
  } else if (kind == "live") {
    c.answer = std::make_unique<HttpChatClient>(http_config(m, s));
  } else {
    throw Error(ErrorCode::ConfigError, fmt::format("unknown client '{}'", kind));
  }
  return c;
}

RetrieverChoice retriever_from(const std::string& name) {
  auto r = parse_retriever(name);
  if (!r) throw Error(ErrorCode::ConfigError, fmt::format("unknown retriever '{}'", name));
  return *r;
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::vector<std::string> hex_list(const std::vector<Address>& v) {
  std::vector<std::string> out;
  for (auto a : v) out.push_back(to_hex(a));
  return out;
}

Address hex_arg(const std::string& text, const char* what) {
  auto v = parse_hex(text);
  if (!v) throw Error(ErrorCode::ConfigError, fmt::format("{} '{}' is not 0x-prefixed hex", what, text));
  return *v;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", p.string()));
  out << content;
}

ojson query_json(std::string_view question, const Retrieval& r, const Answer& a) {
  ojson out;
  out["question"] = question;
  out["answer"] = a.text;
  out["retriever_used"] = r.retriever_used;
  out["attempts"] = r.attempts;
  out["program"] = r.program ? ojson(*r.program) : ojson(nullptr);
  out["provenance"] = ojson::parse(a.provenance);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cachescope: trace-grounded cache replacement analysis"};
  app.require_subcommand(1);
  Settings settings;
  app.add_option("--config", settings.config_path, "JSON config file (flags > environment > file)");

  std::string store_dir;
  auto add_store = [&](CLI::App* cmd) {
    return cmd->add_option("--store", store_dir, "store directory (env CACHESCOPE_STORE)");
  };
  auto resolved_store = [&](const CLI::Option* opt) {
    auto s = settings.get(opt, store_dir, "CACHESCOPE_STORE", "store");
    if (s.empty()) throw Error(ErrorCode::ConfigError, "no store given (--store, CACHESCOPE_STORE or config \"store\")");
    return s;
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a trace file and persist the bundle");
  std::string sim_trace, sim_symbols, sim_policy = "lru", sim_workload;
  std::uint32_t sim_sets = 2048, sim_ways = 16, sim_history = 8;
  std::uint64_t sim_seed = 0;
  std::vector<std::string> sim_bypass;
  bool sim_fold = false;
  sim->add_option("--trace", sim_trace, "trace file: one 'pc address' pair per line")->required();
  sim->add_option("--symbols", sim_symbols, "symbol sidecar JSONL");
  sim->add_option("--sets", sim_sets, "number of sets (power of two)");
  sim->add_option("--ways", sim_ways, "associativity");
  sim->add_option("--history-depth", sim_history, "recent-access history length");
  sim->add_option("--policy", sim_policy, "lru, belady, random, bypass_lru or scored_stub");
  sim->add_option("--seed", sim_seed, "seed for random and scored_stub");
  sim->add_option("--bypass-pc", sim_bypass, "PC to bypass under bypass_lru (repeatable)");
  sim->add_option("--workload", sim_workload, "workload name (default: trace file stem)");
  sim->add_flag("--fold-compulsory", sim_fold, "report compulsory misses inside capacity");
  auto* sim_out = sim->add_option("--out", store_dir, "store directory to write the bundle into");

  // ingest
  auto* ing = app.add_subcommand("ingest", "validate a trace file and report its shape");
  std::string ing_trace, ing_out;
  ing->add_option("--trace", ing_trace, "trace file")->required();
  ing->add_option("--out", ing_out, "write the trace back in canonical form");

  // enrich
  auto* enr = app.add_subcommand("enrich", "attach symbol context to a stored bundle");
  std::string enr_key, enr_symbols;
  auto* enr_store = add_store(enr);
  enr->add_option("--key", enr_key, "bundle id, e.g. mcf_evictions_lru")->required();
  enr->add_option("--symbols", enr_symbols, "symbol sidecar JSONL")->required();

  // stats
  auto* st = app.add_subcommand("stats", "per-PC statistics and insight analyses");
  std::string st_key, st_pc, st_compare, st_metric = "miss_rate";
  std::size_t st_sets = 0, st_bypass = 0;
  bool st_variance = false, st_top = false;
  auto* st_store = add_store(st);
  st->add_option("--key", st_key, "bundle id");
  st->add_option("--pc", st_pc, "one PC (0x-hex)");
  st->add_option("--sets", st_sets, "k hot and k cold sets");
  st->add_option("--bypass", st_bypass, "top n bypass candidates");
  st->add_flag("--variance", st_variance, "group PCs by reuse-distance variance");
  st->add_flag("--top-miss", st_top, "PC with the most misses");
  st->add_option("--compare", st_compare, "rank the policies of this workload");
  st->add_option("--metric", st_metric, "miss_rate, hit_rate, misses, hits or wrong_eviction_pct");

  // query / chat shared
  std::string retriever = "auto";
  int shots = 0;
  std::size_t max_retries = kDefaultMaxRetries, excerpt_cap = kDefaultExcerptCap;
  ModelOptions model;
  CLI::Option* retriever_opt = nullptr;

  auto* qry = app.add_subcommand("query", "answer one question with provenance");
  std::string question;
  auto* qry_store = add_store(qry);
  qry->add_option("question", question, "the question")->required();
  auto add_pipeline = [&](CLI::App* cmd) {
    auto* r = cmd->add_option("--retriever", retriever, "sieve, ranger or auto")
                  ->check(CLI::IsMember({"sieve", "ranger", "auto"}));
    cmd->add_option("--shots", shots, "exemplars in the prompt: 0, 1 or 3")->check(CLI::IsMember({0, 1, 3}));
    cmd->add_option("--max-retries", max_retries, "ranger regeneration limit");
    cmd->add_option("--excerpt-cap", excerpt_cap, "sieve excerpt size");
    model.add(cmd);
    return r;
  };
  retriever_opt = add_pipeline(qry);

  auto* chat = app.add_subcommand("chat", "interactive session over stdin");
  auto* chat_store = add_store(chat);
  auto* chat_retriever = add_pipeline(chat);

  // bench
  auto* bn = app.add_subcommand("bench", "run the question suite and write reports");
  std::string bn_questions, bn_out = "bench-report", bn_scores;
  std::size_t bn_jobs = 1;
  bool bn_model_judge = false;
  auto* bn_store = add_store(bn);
  bn->add_option("--questions", bn_questions, "questions JSONL")->required();
  bn->add_option("--out", bn_out, "directory for report.json, report.csv and report.txt");
  bn->add_option("--judge-scores", bn_scores, "JSONL of {id, score} for ARA questions");
  bn->add_flag("--model-judge", bn_model_judge, "grade ARA answers with the answer client");
  bn->add_option("--jobs", bn_jobs, "questions run in parallel");
  auto* bn_retriever = add_pipeline(bn);

  // serve
  auto* sv = app.add_subcommand("serve", "HTTP API");
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  std::int64_t sv_idle = 1800;
  auto* sv_store = add_store(sv);
  sv->add_option("--host", sv_host, "bind address");
  sv->add_option("--port", sv_port, "port (0 picks one)");
  sv->add_option("--idle-timeout", sv_idle, "session idle timeout in seconds");
  auto* sv_retriever = add_pipeline(sv);

  // gen-fixtures
  auto* gf = app.add_subcommand("gen-fixtures", "regenerate the fixture traces, questions and store");
  std::string gf_out = "data/fixtures", gf_store, gf_config;
  gf->add_option("--out", gf_out, "fixture directory");
  gf->add_option("--store", gf_store, "also write the simulated store here");
  gf->add_option("--from", gf_config, "fixture.json to build from");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    settings.load();
    if (sim->parsed()) {
      CacheConfig cfg;
      cfg.num_sets = sim_sets;
      cfg.ways = sim_ways;
      cfg.history_depth = sim_history;
      std::set<Address> bypass;
      for (const auto& s : sim_bypass) bypass.insert(hex_arg(s, "bypass PC"));
      SimulateOptions opts;
      opts.workload = sim_workload.empty() ? std::filesystem::path(sim_trace).stem().string() : sim_workload;
      opts.fold_compulsory = sim_fold;
      const auto trace = parse_trace_file(sim_trace);
      auto bundle = simulate(trace, cfg, parse_policy(sim_policy, sim_seed, bypass), opts);
      if (!sim_symbols.empty()) {
        auto load = load_symbol_map(sim_symbols);
        for (const auto& w : load.warnings) std::cerr << "warning: " << w << "\n";
        bundle = enrich(std::move(bundle), load.symbols);
      }
      const auto out = resolved_store(sim_out);
      save_bundle(bundle, out);
      ojson j;
      j["key"] = bundle.key.canonical_id();
      j["records"] = bundle.records.size();
      j["hits"] = count_events(bundle.records, [](const AccessRecord& r) { return !r.is_miss(); });
      j["metadata"] = bundle.metadata;
      std::cout << j.dump() << "\n";
    } else if (ing->parsed()) {
      const auto trace = parse_trace_file(ing_trace);
      std::set<Address> pcs, addrs;
      for (const auto& a : trace) {
        pcs.insert(a.pc);
        addrs.insert(a.address);
      }
      if (!ing_out.empty()) {
        std::ostringstream os;
        write_trace(trace, os);
        write_file(ing_out, os.str());
      }
      std::cout << ojson{{"accesses", trace.size()}, {"distinct_pcs", pcs.size()}, {"distinct_addresses", addrs.size()}}.dump()
                << "\n";
    } else if (enr->parsed()) {
      const std::filesystem::path root = resolved_store(enr_store);
      const auto key = TraceKey::parse(enr_key);
      auto bundle = load_bundle(root / key.canonical_id());
      auto load = load_symbol_map(enr_symbols);
      for (const auto& w : load.warnings) std::cerr << "warning: " << w << "\n";
      bundle = enrich(std::move(bundle), load.symbols);
      save_bundle(bundle, root);
      std::cout << ojson{{"key", key.canonical_id()}, {"symbols", load.symbols.size()}}.dump() << "\n";
    } else if (st->parsed()) {
      const auto store = load_store(resolved_store(st_store));
      if (!st_compare.empty()) {
        auto metric = parse_metric(st_metric);
        if (!metric) throw Error(ErrorCode::ConfigError, fmt::format("unknown metric '{}'", st_metric));
        std::optional<Address> pc;
        if (!st_pc.empty()) pc = hex_arg(st_pc, "pc");
        ojson list = ojson::array();
        for (const auto& r : compare_policies(store, st_compare, pc, *metric))
          list.push_back({{"policy", r.policy}, {"value", r.value}});
        std::cout << ojson{{"workload", st_compare}, {"metric", st_metric}, {"ranking", list}}.dump() << "\n";
        return 0;
      }
      if (st_key.empty()) throw Error(ErrorCode::ConfigError, "stats needs --key (or --compare)");
      const auto& records = store.at(TraceKey::parse(st_key)).records;
      ojson out;
      out["key"] = st_key;
      if (!st_pc.empty()) out["pc"] = ojson::parse(pc_stats_json(pc_stats(records, hex_arg(st_pc, "pc"))));
      if (st_sets > 0) out["sets"] = ojson::parse(set_hotness_json(set_hotness(records, st_sets)));
      if (st_variance) {
        const auto g = group_pcs_by_reuse_variance(records);
        out["variance"] = {{"low", hex_list(g.low)},         {"medium", hex_list(g.medium)},
                           {"high", hex_list(g.high)},       {"unclassified", hex_list(g.unclassified)},
                           {"low_cutoff", g.low_cutoff},     {"high_cutoff", g.high_cutoff}};
      }
      if (st_bypass > 0) {
        out["bypass"] = ojson::array();
        for (const auto& c : bypass_candidates(records, st_bypass))
          out["bypass"].push_back({{"pc", to_hex(c.stats.pc)},
                                   {"hit_rate", c.stats.hit_rate()},
                                   {"mean_reuse_distance", optional_number(c.stats.mean_reuse_distance)},
                                   {"reason", c.reason}});
      }
      if (st_top) {
        const auto t = top_miss_pc(records);
        out["top_miss_pc"] = {{"pc", to_hex(t.pc)}, {"misses", t.miss_count}, {"miss_rate", t.miss_rate}};
      }
      if (out.size() == 1) {
        out["pcs"] = ojson::array();
        for (const auto& s : all_pc_stats(records)) out["pcs"].push_back(ojson::parse(pc_stats_json(s)));
      }
      std::cout << out.dump() << "\n";
    } else if (qry->parsed()) {
      const auto store = load_store(resolved_store(qry_store));
      auto clients = make_clients(model, settings, store);
      const auto choice = retriever_from(settings.get(retriever_opt, retriever, nullptr, "retriever", "auto"));
      const auto r = retrieve_evidence(store, question, choice, *clients.program_or_answer(), max_retries, excerpt_cap);
      ConversationMemory memory;
      const auto a = answer(question, r.evidence, memory, *clients.answer, shots);
      std::cout << query_json(question, r, a).dump(2) << "\n";
    } else if (chat->parsed()) {
      const auto store = load_store(resolved_store(chat_store));
      auto clients = make_clients(model, settings, store);
      const auto choice = retriever_from(settings.get(chat_retriever, retriever, nullptr, "retriever", "auto"));
      ConversationMemory memory;
      std::string line, last_evidence;
      std::cout << "cachescope chat (" << to_string(choice) << "). :evidence shows the last evidence, :quit exits.\n";
      while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        if (line == ":quit" || line == ":q") break;
        if (line == ":evidence") {
          std::cout << last_evidence << "\n";
          continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
          const auto r = retrieve_evidence(store, line, choice, *clients.program_or_answer(), max_retries, excerpt_cap);
          const auto a = answer(line, r.evidence, memory, *clients.answer, shots);
          last_evidence = r.evidence.text;
          std::cout << a.text << "\n";
          if (r.program) std::cout << "[query program] " << *r.program << "\n";
        } catch (const Error& e) {
          std::cout << "error: " << error_json(e) << "\n";
        }
      }
    } else if (bn->parsed()) {
      const auto store = load_store(resolved_store(bn_store));
      auto clients = make_clients(model, settings, store);
      const auto suite = load_questions(bn_questions);
      for (const auto& w : suite.warnings) std::cerr << "warning: " << w << "\n";
      std::unique_ptr<Judge> judge;
      if (!bn_scores.empty()) judge = std::make_unique<ScoreFileJudge>(ScoreFileJudge::load(bn_scores));
      else if (bn_model_judge) judge = std::make_unique<ModelJudge>(*clients.answer);
      PipelineConfig cfg;
      cfg.retriever = retriever_from(settings.get(bn_retriever, retriever, nullptr, "retriever", "auto"));
      cfg.answer_client = clients.answer.get();
      cfg.program_client = clients.program_or_answer();
      cfg.judge = judge.get();
      cfg.shots = shots;
      cfg.max_retries = max_retries;
      cfg.excerpt_cap = excerpt_cap;
      cfg.jobs = bn_jobs;
      const auto report = run_bench(store, cfg, suite.questions);
      const std::filesystem::path out = bn_out;
      write_file(out / "report.json", report_to_json(report));
      write_file(out / "report.csv", report_to_csv(report));
      const auto text = report_to_text(report);
      write_file(out / "report.txt", text);
      std::cout << text;
    } else if (sv->parsed()) {
      const auto store = load_store(resolved_store(sv_store));
      auto clients = make_clients(model, settings, store);
      ServiceConfig cfg;
      cfg.retriever = retriever_from(settings.get(sv_retriever, retriever, nullptr, "retriever", "auto"));
      cfg.shots = shots;
      cfg.max_retries = max_retries;
      cfg.excerpt_cap = excerpt_cap;
      cfg.idle_timeout = std::chrono::seconds(sv_idle);
      Service service(store, ServiceClients{clients.answer.get(), clients.program_or_answer(), nullptr}, cfg);
      const int bound = service.start(sv_host, sv_port);
      std::cerr << fmt::format("serving {} bundles on {}:{}\n", store.size(), sv_host, bound);
      for (;;) std::this_thread::sleep_for(std::chrono::hours(1));  // until killed
    } else if (gf->parsed()) {
      fixtures::FixtureConfig cfg;
      if (!gf_config.empty()) {
        std::ifstream in(gf_config);
        if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", gf_config));
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = fixtures::config_from_json(ss.str());
      }
      const auto set = fixtures::build(cfg);
      std::optional<std::filesystem::path> store_out;
      if (!gf_store.empty()) store_out = gf_store;
      fixtures::write(set, gf_out, store_out);
      std::cout << ojson{{"out", gf_out}, {"bundles", set.store.size()}, {"questions", set.questions.size()}}.dump()
                << "\n";
    }
  } catch (const Error& e) {
    std::cerr << error_json(e) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << ojson{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
