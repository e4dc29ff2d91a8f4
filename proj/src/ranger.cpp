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

#include "cachescope/ranger.hpp"

#include <regex>

#include <fmt/format.h>

#include "cachescope/sieve.hpp"

namespace cachescope {

namespace {

std::string_view type_name(dsl::ColumnType t) {
  switch (t) {
    case dsl::ColumnType::Hex: return "hex";
    case dsl::ColumnType::Int: return "integer, may be null";
    case dsl::ColumnType::Bool: return "0/1";
    case dsl::ColumnType::Text: return "text";
    case dsl::ColumnType::List: return "list, display only";
  }
  return "text";
}

constexpr std::string_view kGrammar = R"G(program   = source { "|" stage } "|" emit
source    = ("from" | "metadata") workload "/" policy
stage     = filter | group_by | aggregate | sort | limit | extract
filter    = "filter" column ( op literal | "in" "(" literal { "," literal } ")" )
op        = "=" | "!=" | "<" | "<=" | ">" | ">="
group_by  = "group_by" column
aggregate = "aggregate" ( "count" [column] | ("sum"|"mean"|"std"|"min"|"max"|"rate_pct") column )
sort      = "sort" ( column | "key" | aggregate_index ) [ "asc" | "desc" ]
limit     = "limit" integer
extract   = "extract" "regex with exactly one (capture group)"
emit      = "emit" "template with {placeholders}"
literal   = integer | decimal | 0xHEX | "string" | true | false | null)G";

}  // namespace

std::string build_system_prompt(const TraceStore& store) {
  std::string p;
  p += "You write one query program that answers a question about cache simulation traces.\n";
  p += "Reply with the program only: no prose, no markdown.\n\n";

  p += "## Traces\n";
  p += "Each trace is named <workload>_evictions_<policy> and is addressed as <workload>/<policy>.\n";
  for (const auto& k : store.keys()) p += fmt::format("- {} (from {}/{})\n", k.canonical_id(), k.workload(), k.policy());

  p += "\n## Record columns\n";
  p += "One row per last-level-cache access, in trace order.\n";
  for (const auto& c : dsl::columns()) p += fmt::format("- {} ({})\n", c.name, type_name(c.type));
  p += "evict is \"Cache Hit\" or \"Cache Miss\"; is_miss is 1 for a miss. miss_type is None, "
       "Compulsory, Capacity or Conflict.\n";

  p += "\n## Metadata\n";
  p += "`metadata <workload>/<policy>` reads the trace's one-line performance summary, e.g.\n";
  p += "  Cache Performance Summary: 140704 total accesses, 133542 total misses, 94.91% miss rate, ...\n";
  p += "Pull a number out of it with `extract` and a regex holding one capture group, "
       "e.g. extract \"([0-9.]+)% miss rate\".\n";

  p += "\n## Grammar\n";
  p += kGrammar;
  p += "\n\nStages run left to right. filter stages come before group_by and aggregate. "
       "extract is only for a metadata source.\n";
  p += "emit placeholders: {0}, {1}, ... for aggregates or extracts in order; {key} for the "
       "group value (the template repeats per group, joined by \", \"); {column_name} for row "
       "values when there is no aggregation; {trace}, {metadata}, {description}.\n";
  p += "Counts print as integers, other numbers with two decimals, PCs and addresses as 0x hex.\n";

  p += "\n## Valid examples\n";
  p += "from mcf/lru | filter program_counter = 0x401e31 | aggregate rate_pct is_miss | emit "
       "\"The miss rate for PC 0x401e31 is {0}%.\"\n";
  p += "  -> The miss rate for PC 0x401e31 is 44.69%.\n";
  p += "from mcf/belady | filter program_counter = 0x401e31 | filter memory_address = "
       "0x35e798a637f | group_by evict | emit \"{key}\"\n";
  p += "  -> Cache Miss\n";

  p += "\n## Invalid examples\n";
  p += "from mcf/lru | aggregate count | filter is_miss = 1 | emit \"{0}\"\n";
  p += "  (filter after aggregate)\n";
  p += "from mcf/lru | extract \"([0-9.]+)% miss rate\" | emit \"{0}\"\n";
  p += "  (extract needs a metadata source)\n";

  p += "\n## Steps\n";
  p += "1. Pick the trace whose workload and policy the question names.\n";
  p += "2. Narrow to the PC and/or memory address the question names.\n";
  p += "3. If the question is about whole-trace totals, use the metadata summary instead.\n";
  p += "If nothing matches, the program still runs and reports that nothing was found.\n";
  return p;
}

std::string extract_program_text(std::string_view completion) {
  const auto open = completion.find("```");
  if (open != std::string_view::npos) {
    auto body = completion.find('\n', open);
    if (body != std::string_view::npos) {
      ++body;
      const auto close = completion.find("```", body);
      if (close != std::string_view::npos) {
        auto block = completion.substr(body, close - body);
        while (!block.empty() && (block.back() == '\n' || block.back() == '\r' || block.back() == ' '))
          block.remove_suffix(1);
        return std::string(block);
      }
    }
  }
  return std::string(completion);
}

RangerOutcome ranger_retrieve(std::string_view question, ModelClient& client,
                              const TraceStore& store, std::size_t max_retries) {
  std::vector<ChatMessage> messages{{"system", build_system_prompt(store)},
                                    {"user", std::string(question)}};
  RangerOutcome out;
  for (std::size_t attempt = 0; attempt <= max_retries; ++attempt) {
    out.attempts = attempt + 1;
    const auto completion = client.chat(messages);
    const auto text = extract_program_text(completion);
    std::string feedback;
    try {
      auto program = dsl::parse_program(text);
      auto result = dsl::evaluate(program, store);
      out.program = std::move(program);
      if (!result.empty) {
        out.result = std::move(result.text);
        out.not_found = false;
        return out;
      }
      out.transcript.push_back({completion, ErrorCode::EmptyResult, result.text});
      feedback = fmt::format("The program ran but matched nothing: {}", result.text);
      if (attempt == max_retries) {
        out.result = std::move(result.text);
        out.not_found = true;
        return out;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseError && e.code() != ErrorCode::SchemaError &&
          e.code() != ErrorCode::BundleNotFound && e.code() != ErrorCode::InvalidKey)
        throw;
      out.transcript.push_back({completion, e.code(), e.what()});
      feedback = fmt::format("{}: {}", to_string(e.code()), e.what());
    }
    messages.push_back({"assistant", completion});
    messages.push_back({"user", feedback + "\nReply with a corrected program only."});
  }
  throw ExhaustedRetries(
      fmt::format("no valid program after {} attempts; last error: {}", out.attempts,
                  out.transcript.empty() ? "" : out.transcript.back().error),
      std::move(out.transcript));
}

TemplateProgramClient::TemplateProgramClient(const TraceStore& store)
    : workloads_(store.workloads()), policies_(store.policies()) {}

std::string TemplateProgramClient::chat(const std::vector<ChatMessage>& messages) {
  for (const auto& m : messages)
    if (m.role == "user") return program_for(m.content);
  return "";
}

std::string TemplateProgramClient::program_for(std::string_view question) const {
  const auto f = parse_query(question, workloads_, policies_);
  if (!f.workload || !f.policy) return "Which trace do you mean?";
  std::string q;
  for (const auto& t : tokenize(question)) q += t + " ";
  auto has = [&](std::string_view s) { return q.find(s) != std::string::npos; };
  const auto trace = fmt::format("{}/{}", *f.workload, *f.policy);
  const std::string from = "from " + trace;
  if (!f.pcs.empty() && !f.addresses.empty()) {
    return fmt::format("{} | filter program_counter = {} | filter memory_address = {} | group_by evict | emit \"{{key}}\"",
                       from, to_hex(f.pcs[0]), to_hex(f.addresses[0]));
  }
  if (!f.pcs.empty()) {
    const auto pc = to_hex(f.pcs[0]);
    if (has("miss rate"))
      return fmt::format("{} | filter program_counter = {} | aggregate rate_pct is_miss | emit \"The miss rate for PC {} is {{0}}%.\"",
                         from, pc, pc);
    if (has("how many misses") || has("number of misses"))
      return fmt::format("{} | filter program_counter = {} | aggregate sum is_miss | emit \"PC {} missed {{0}} times.\"",
                         from, pc, pc);
    if (has("how many") || has("appear"))
      return fmt::format("{} | filter program_counter = {} | aggregate count | emit \"PC {} appeared {{0}} times in this trace.\"",
                         from, pc, pc);
  }
  if (has("unique pc") || has("distinct pc"))
    return fmt::format("{} | group_by program_counter | emit \"{{key}}\"", from);
  if (has("hot") || has("cold")) {
    std::smatch m;
    static const std::regex k_re(R"(\b([0-9]{1,3}) (hot|cold|sets))");
    const std::size_t k = std::regex_search(q, m, k_re) ? std::stoul(m[1].str()) : 5;
    return fmt::format("{} | group_by cache_set_id | aggregate rate_pct is_miss | sort 0 {} | limit {} | emit \"{{key}}\"",
                       from, has("cold") ? "desc" : "asc", k);
  }
  if (has("miss rate"))
    return fmt::format("metadata {} | extract \"([0-9.]+)% miss rate\" | emit \"The miss rate of {{trace}} is {{0}}%.\"", trace);
  if (has("wrong evictions"))
    return fmt::format("metadata {} | extract \"([0-9]+) \\\\([0-9.]+%\\\\) wrong evictions\" | emit \"{{0}} wrong evictions\"", trace);
  if (has("evictions"))
    return fmt::format("metadata {} | extract \"([0-9]+) total evictions\" | emit \"{{0}} total evictions\"", trace);
  return fmt::format("metadata {} | extract \"(.+)\" | emit \"{{0}}\"", trace);
}

}  // namespace cachescope
