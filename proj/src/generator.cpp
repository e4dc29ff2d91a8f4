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

#include "cachescope/generator.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "json.hpp"

namespace cachescope {

namespace {

constexpr std::size_t kSummaryLineChars = 200;
constexpr std::string_view kSummaryHeader = "Earlier conversation (oldest first):";

std::string clip(std::string_view s, std::size_t n) {
  if (s.size() <= n) return std::string(s);
  return std::string(s.substr(0, n)) + "...";
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return 0;
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string fact_text(const ChatTurn& t) { return fmt::format("{}: {}", to_string(t.role), t.text); }

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::System: return "system";
  }
  return "user";
}

ConversationMemory::ConversationMemory(MemoryConfig config) : config_(config) {
  if (config_.buffer_turns == 0) config_.buffer_turns = 1;
}

void ConversationMemory::append(ChatTurn turn, ModelClient* client) {
  if (turn.text.empty()) return;
  Fact fact{fact_text(turn), std::nullopt, sequence_++};
  if (client) {
    try {
      fact.embedding = client->embed(fact.text);
    } catch (const Error&) {
      fact.embedding.reset();
    }
  }
  facts_.push_back(std::move(fact));
  buffer_.push_back(std::move(turn));
  if (buffer_.size() > config_.buffer_turns) {
    auto evicted = std::move(buffer_.front());
    buffer_.pop_front();
    summarize_evicted(evicted, client);
  }
}

void ConversationMemory::summarize_evicted(const ChatTurn& turn, ModelClient* client) {
  if (client && config_.model_summary) {
    try {
      const std::vector<ChatMessage> msgs{
          {"system", "Fold the new turn into the running summary of a conversation about cache "
                     "traces. Keep every PC, address, trace name and number. Reply with the "
                     "summary only."},
          {"user", fmt::format("Running summary:\n{}\n\nNew turn:\n{}", summary_.empty() ? "(empty)" : summary_,
                               fact_text(turn))}};
      auto s = client->chat(msgs);
      if (!s.empty()) {
        summary_ = std::move(s);
        return;
      }
    } catch (const Error&) {
      // fall through to the truncating summary
    }
  }
  std::vector<std::string> lines;
  std::size_t start = 0;
  if (summary_.starts_with(kSummaryHeader)) {
    start = kSummaryHeader.size() + 1;
    while (start < summary_.size()) {
      auto end = summary_.find('\n', start);
      if (end == std::string::npos) end = summary_.size();
      lines.push_back(summary_.substr(start, end - start));
      start = end + 1;
    }
  } else if (!summary_.empty()) {
    lines.push_back("- " + clip(summary_, kSummaryLineChars));
  }
  lines.push_back(fmt::format("- {}: {}", to_string(turn.role), clip(turn.text, kSummaryLineChars)));
  auto total = [&] {
    std::size_t n = kSummaryHeader.size();
    for (const auto& l : lines) n += l.size() + 1;
    return n;
  };
  while (lines.size() > 1 && total() > config_.summary_chars) lines.erase(lines.begin());
  summary_ = fmt::format("{}\n{}", kSummaryHeader, fmt::join(lines, "\n"));
}

std::vector<std::string> ConversationMemory::recall(std::string_view query, std::size_t k,
                                                    ModelClient* client) const {
  // Turns still in the buffer are already in the prompt.
  const std::size_t first_buffered = sequence_ - buffer_.size();
  std::vector<const Fact*> pool;
  for (const auto& f : facts_)
    if (f.sequence < first_buffered) pool.push_back(&f);
  if (pool.empty() || k == 0) return {};

  std::optional<std::vector<double>> qe;
  const bool all_embedded = std::all_of(pool.begin(), pool.end(), [](const Fact* f) { return f->embedding.has_value(); });
  if (client && all_embedded) {
    try {
      qe = client->embed(query);
    } catch (const Error&) {
      qe.reset();
    }
  }
  std::vector<std::pair<double, const Fact*>> scored;
  for (const auto* f : pool) {
    const double s = qe ? cosine(*qe, *f->embedding) : static_cast<double>(token_overlap(query, f->text));
    if (s > 0) scored.emplace_back(s, f);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->sequence > b.second->sequence;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].second->text);
  return out;
}

Evidence make_evidence(const ContextBundle& bundle) {
  Evidence e;
  e.text = render_context(bundle);
  const auto& prov = bundle.provenance;
  nlohmann::ordered_json j;
  j["retriever"] = "sieve";
  j["trace"] = prov.key.canonical_id();
  j["filters"] = prov.filters.describe();
  j["matched_records"] = prov.matched_records;
  j["excerpt_records"] = bundle.trace_excerpt.size();
  e.provenance = j.dump();
  const bool pc_missing = std::any_of(bundle.pc_context.begin(), bundle.pc_context.end(),
                                      [](const PcContext& c) { return !c.stats; });
  e.empty = (prov.filters.has_record_filters() && prov.matched_records == 0) || pc_missing;
  return e;
}

Evidence make_evidence(const RangerOutcome& outcome, const TraceStore& /*store*/) {
  Evidence e;
  e.text = fmt::format("Result: {}\n", outcome.result);
  nlohmann::ordered_json j;
  j["retriever"] = "ranger";
  if (outcome.program) {
    const auto& src = outcome.program->source;
    e.text += fmt::format("Trace: {}\n", TraceKey(src.workload, src.policy).canonical_id());
    e.text += fmt::format("Query program: {}\n", dsl::pretty_print(*outcome.program));
    j["trace"] = TraceKey(src.workload, src.policy).canonical_id();
    j["program"] = dsl::pretty_print(*outcome.program);
  }
  j["attempts"] = outcome.attempts;
  e.provenance = j.dump();
  e.empty = outcome.not_found;
  return e;
}

const std::vector<Exemplar>& exemplar_library() {
  static const std::vector<Exemplar> kLibrary{
      {"For policy LRU on workload lbm: Access #5120: PC 0x4021b7, address 0x3a91c04f2c0, set "
       "1035 -> Cache result: Cache Miss. Evicted 0x3a91c0512c0 (needed again in 812 accesses); "
       "inserted line needed again in 4410 accesses.",
       "Cache Miss"},
      {"For policy Belady on workload astar: Access #77: PC 0x40a3f4, address 0x2b0e1d8c100, set "
       "1540 -> Cache result: Cache Hit. Recency: last accessed 19 accesses ago.",
       "Cache Hit"},
      {"For policy LRU on workload omnetpp: Access #90211: PC 0x45c0e9, address 0x1f4c6a0b7c0, set "
       "1777 -> Cache result: Cache Miss. Miss type: Conflict.",
       "Cache Miss"},
  };
  return kLibrary;
}

std::size_t exemplar_count(int shots) {
  if (shots <= 0) return 0;
  if (shots == 1) return 1;
  return 3;
}

std::vector<ChatMessage> build_prompt(std::string_view question, const Evidence& evidence,
                                      const ConversationMemory& memory, int shots,
                                      ModelClient* recall_client) {
  const auto& cfg = memory.config();
  std::string summary = memory.summary();
  auto facts = memory.recall(question, cfg.recall_k, recall_client);
  std::vector<const ChatTurn*> turns;
  for (const auto& t : memory.buffer()) turns.push_back(&t);

  auto used = [&] {
    std::size_t n = summary.size();
    for (const auto& f : facts) n += f.size();
    for (const auto* t : turns) n += t->text.size();
    return n;
  };
  while (used() > cfg.char_budget && !turns.empty()) turns.erase(turns.begin());
  while (used() > cfg.char_budget && !facts.empty()) facts.pop_back();
  if (used() > cfg.char_budget) summary = summary.substr(summary.size() - cfg.char_budget);

  std::vector<ChatMessage> msgs{{"system", std::string(kSystemFraming)}};
  for (const auto* t : turns) msgs.push_back({std::string(to_string(t->role)), t->text});

  std::string body;
  if (!summary.empty()) body += fmt::format("## Conversation summary\n{}\n\n", summary);
  if (!facts.empty()) {
    body += "## Recalled facts\n";
    for (const auto& f : facts) body += fmt::format("- {}\n", f);
    body += "\n";
  }
  body += fmt::format("## Evidence\n{}\n", evidence.text);
  if (!evidence.text.ends_with('\n')) body += "\n";
  const auto n = exemplar_count(shots);
  if (n > 0) {
    body += "## Examples\n";
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ex = exemplar_library()[i];
      body += fmt::format("Context: {}\nResponse: {}\n\n", ex.context, ex.response);
    }
  }
  body += fmt::format("## Question\n{}\n", question);
  msgs.push_back({"user", std::move(body)});
  return msgs;
}

Answer answer(std::string_view question, const Evidence& evidence, ConversationMemory& memory,
              ModelClient& client, int shots) {
  Answer a;
  a.prompt = build_prompt(question, evidence, memory, shots, &client);
  a.text = client.chat(a.prompt);
  a.provenance = evidence.provenance;
  memory.append({Role::User, std::string(question), ""}, &client);
  memory.append({Role::Assistant, a.text, evidence.provenance}, &client);
  return a;
}

std::string_view to_string(RetrieverChoice c) {
  switch (c) {
    case RetrieverChoice::Sieve: return "sieve";
    case RetrieverChoice::Ranger: return "ranger";
    case RetrieverChoice::Auto: return "auto";
  }
  return "sieve";
}

std::optional<RetrieverChoice> parse_retriever(std::string_view name) {
  if (name == "sieve") return RetrieverChoice::Sieve;
  if (name == "ranger") return RetrieverChoice::Ranger;
  if (name == "auto") return RetrieverChoice::Auto;
  return std::nullopt;
}

Retrieval retrieve_evidence(const TraceStore& store, std::string_view question, RetrieverChoice choice,
                            ModelClient& program_client, std::size_t max_retries, std::size_t excerpt_cap) {
  Retrieval r;
  auto via_ranger = [&] {
    r.retriever_used = "ranger";
    auto outcome = ranger_retrieve(question, program_client, store, max_retries);
    r.attempts = outcome.attempts;
    if (outcome.program) r.program = dsl::pretty_print(*outcome.program);
    r.evidence = make_evidence(outcome, store);
  };
  auto via_sieve = [&] {
    r.retriever_used = "sieve";
    r.attempts = 1;
    r.evidence = make_evidence(sieve_query(store, question, excerpt_cap));
  };
  switch (choice) {
    case RetrieverChoice::Sieve: via_sieve(); break;
    case RetrieverChoice::Ranger: via_ranger(); break;
    case RetrieverChoice::Auto: {
      const auto filters = parse_query(question, store.workloads(), store.policies());
      bool done = false;
      if (filters.has_record_filters()) {
        try {
          via_sieve();
          done = !r.evidence.empty;
        } catch (const Error&) {
          done = false;
        }
      }
      if (!done) via_ranger();
      break;
    }
  }
  return r;
}

}  // namespace cachescope
