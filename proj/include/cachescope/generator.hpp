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

#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cachescope/model_client.hpp"
#include "cachescope/ranger.hpp"
#include "cachescope/sieve.hpp"

namespace cachescope {

enum class Role { User, Assistant, System };
std::string_view to_string(Role role);

struct ChatTurn {
  Role role = Role::User;
  std::string text;  // never empty
  std::string provenance;
};

struct MemoryConfig {
  std::size_t buffer_turns = 8;
  std::size_t recall_k = 3;
  /// Characters of prompt space the memory may take (about 4 per token).
  std::size_t char_budget = 6000;
  /// Cap on the rolling summary when it is built without a model.
  std::size_t summary_chars = 1500;
  /// Ask the client to write the rolling summary instead of truncating.
  bool model_summary = false;
};

struct Fact {
  std::string text;
  std::optional<std::vector<double>> embedding;
  std::size_t sequence = 0;
};

/// Sliding buffer of recent turns, a rolling summary of turns pushed out of
/// it, and every turn kept as a recallable fact.
class ConversationMemory {
 public:
  explicit ConversationMemory(MemoryConfig config = {});

  /// `client` (optional) writes the summary and embeds facts; without one
  /// the summary is a truncated transcript and recall uses token overlap.
  /// Empty turns are ignored.
  void append(ChatTurn turn, ModelClient* client = nullptr);

  /// Top-k facts, best first; ties go to the most recent.
  std::vector<std::string> recall(std::string_view query, std::size_t k,
                                  ModelClient* client = nullptr) const;

  const std::deque<ChatTurn>& buffer() const { return buffer_; }
  const std::string& summary() const { return summary_; }
  const std::vector<Fact>& facts() const { return facts_; }
  const MemoryConfig& config() const { return config_; }

 private:
  void summarize_evicted(const ChatTurn& turn, ModelClient* client);

  MemoryConfig config_;
  std::deque<ChatTurn> buffer_;
  std::string summary_;
  std::vector<Fact> facts_;
  std::size_t sequence_ = 0;
};

/// Rendered evidence plus how to re-run the retrieval.
struct Evidence {
  std::string text;
  std::string provenance;
  bool empty = false;  // nothing matched
};

Evidence make_evidence(const ContextBundle& bundle);
Evidence make_evidence(const RangerOutcome& outcome, const TraceStore& store);

enum class RetrieverChoice { Sieve, Ranger, Auto };
std::string_view to_string(RetrieverChoice choice);
std::optional<RetrieverChoice> parse_retriever(std::string_view name);

struct Retrieval {
  Evidence evidence;
  std::string retriever_used;  // "sieve" or "ranger"
  std::size_t attempts = 0;
  std::optional<std::string> program;  // pretty-printed, ranger only
};

/// Auto tries the sieve when the question names a PC, address, set or
/// outcome, and falls back to the ranger when that fails or finds nothing.
/// Sieve and ranger errors propagate from the retriever that ran last.
Retrieval retrieve_evidence(const TraceStore& store, std::string_view question,
                            RetrieverChoice choice, ModelClient& program_client,
                            std::size_t max_retries = kDefaultMaxRetries,
                            std::size_t excerpt_cap = kDefaultExcerptCap);

struct Exemplar {
  std::string context;
  std::string response;
};

/// Hit/miss context-response pairs used for one- and few-shot prompts.
const std::vector<Exemplar>& exemplar_library();

/// 0, 1 or 3 exemplars.
std::size_t exemplar_count(int shots);

inline constexpr std::string_view kSystemFraming =
    "You answer questions about cache replacement behaviour using only the trace evidence "
    "provided. Quote the exact values from the evidence. If the evidence says a PC or "
    "address does not appear, or that no match was found, say so plainly and do not "
    "guess a verdict or a number.";

/// Deterministic: same inputs give the same messages.
std::vector<ChatMessage> build_prompt(std::string_view question, const Evidence& evidence,
                                      const ConversationMemory& memory, int shots,
                                      ModelClient* recall_client = nullptr);

struct Answer {
  std::string text;
  std::string provenance;
  std::vector<ChatMessage> prompt;
};

/// Throws ClientError with memory left untouched.
Answer answer(std::string_view question, const Evidence& evidence, ConversationMemory& memory,
              ModelClient& client, int shots = 0);

}  // namespace cachescope
