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

#include "cachescope/sieve.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "cachescope/simulator.hpp"

namespace cachescope {

namespace {

bool is_hex_token(std::string_view t) {
  return t.size() > 2 && t[0] == '0' && t[1] == 'x';
}

bool is_number(std::string_view t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<std::string> split_parts(std::string_view name) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : name) {
    if (c == '_') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

const std::set<std::string>& pc_keywords() {
  static const std::set<std::string> k{"pc", "pcs", "counter", "instruction"};
  return k;
}

const std::set<std::string>& address_keywords() {
  static const std::set<std::string> k{"address", "addresses", "addr", "line"};
  return k;
}

std::optional<std::string> pick_name(std::span<const std::string> tokens,
                                     std::span<const std::string> known, const NameRanker& ranker) {
  std::optional<std::string> best;
  NameScore best_score;
  bool tied = false;
  for (const auto& name : known) {
    const auto s = ranker.score(tokens, name);
    if (s.similarity <= kNameThreshold) continue;
    if (!best || s.similarity > best_score.similarity ||
        (s.similarity == best_score.similarity && s.matched_parts > best_score.matched_parts)) {
      best = name;
      best_score = s;
      tied = false;
    } else if (s.similarity == best_score.similarity && s.matched_parts == best_score.matched_parts) {
      tied = true;
    }
  }
  if (tied) return std::nullopt;
  return best;
}

std::pair<std::string, std::string> split_description(const std::string& description) {
  constexpr std::string_view kWorkload = "Workload: ";
  constexpr std::string_view kPolicy = "Replacement Policy: ";
  std::string workload, policy;
  std::size_t start = 0;
  bool structured = false;
  while (start <= description.size()) {
    auto end = description.find('\n', start);
    if (end == std::string::npos) end = description.size();
    std::string_view line(description.data() + start, end - start);
    if (line.starts_with(kWorkload)) {
      workload = line.substr(kWorkload.size());
      structured = true;
    } else if (line.starts_with(kPolicy)) {
      policy = line.substr(kPolicy.size());
      structured = true;
    }
    start = end + 1;
  }
  if (!structured) workload = description;
  return {workload, policy};
}

std::string line_refs(const std::vector<LineRef>& refs) {
  std::vector<std::string> parts;
  for (const auto& r : refs) parts.push_back(fmt::format("({}, {})", to_hex(r.pc), to_hex(r.address)));
  return parts.empty() ? "(empty)" : fmt::format("{}", fmt::join(parts, " "));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    const char l = static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    if ((l >= 'a' && l <= 'z') || (l >= '0' && l <= '9') || l == '_') cur += l;
    else flush();
  }
  flush();
  return out;
}

double edit_similarity(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  const double len = static_cast<double>(std::max(a.size(), b.size()));
  return 1.0 - static_cast<double>(prev[b.size()]) / len;
}

NameScore LexicalNameRanker::score(std::span<const std::string> tokens,
                                   std::string_view candidate) const {
  const auto parts = split_parts(candidate);
  if (parts.empty()) return {};
  if (std::find(tokens.begin(), tokens.end(), candidate) != tokens.end())
    return {1.0, parts.size()};
  std::vector<std::string> words;
  for (const auto& t : tokens) {
    if (is_hex_token(t) || is_number(t) || t.size() < 2) continue;
    for (auto& p : split_parts(t)) words.push_back(std::move(p));
  }
  double total = 0;
  std::size_t matched = 0;
  for (const auto& part : parts) {
    double best = 0;
    for (const auto& w : words) best = std::max(best, edit_similarity(part, w));
    total += best;
    if (best > kNameThreshold) ++matched;
  }
  return {total / static_cast<double>(parts.size()), matched};
}

QueryFilters parse_query(std::string_view text, std::span<const std::string> known_workloads,
                         std::span<const std::string> known_policies, const NameRanker& ranker) {
  QueryFilters f;
  const auto tokens = tokenize(text);
  f.workload = pick_name(tokens, known_workloads, ranker);
  f.policy = pick_name(tokens, known_policies, ranker);

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (!is_hex_token(t)) continue;
    const auto value = parse_hex(t);
    if (!value) continue;
    const std::string prev = i > 0 ? tokens[i - 1] : "";
    bool as_pc;
    if (pc_keywords().count(prev)) as_pc = true;
    else if (address_keywords().count(prev)) as_pc = false;
    else as_pc = hex_digit_count(t) <= 8;
    auto& list = as_pc ? f.pcs : f.addresses;
    if (std::find(list.begin(), list.end(), *value) == list.end()) list.push_back(*value);
  }

  std::string lower;
  for (const auto& t : tokens) lower += t + " ";
  static const std::regex set_re(R"(\bset (?:id )?(\d{1,9}) )");
  for (std::sregex_iterator it(lower.begin(), lower.end(), set_re), end; it != end; ++it) {
    const auto id = static_cast<std::uint32_t>(std::stoul((*it)[1].str()));
    if (std::find(f.set_ids.begin(), f.set_ids.end(), id) == f.set_ids.end()) f.set_ids.push_back(id);
  }
  static const std::regex miss_re(
      R"(\b(only (the )?misses|misses only|(that|which) missed|missed accesses|accesses that miss)\b)");
  static const std::regex hit_re(
      R"(\b(only (the )?hits|hits only|(that|which) hit|accesses that hit)\b)");
  const bool miss = std::regex_search(lower, miss_re);
  const bool hit = std::regex_search(lower, hit_re);
  if (miss != hit) f.outcome = miss ? Outcome::Miss : Outcome::Hit;
  return f;
}

ContextBundle retrieve(const TraceStore& store, const QueryFilters& filters,
                       std::size_t excerpt_cap) {
  const TraceBundle* bundle = nullptr;
  if (filters.workload && filters.policy) {
    TraceKey key;
    try {
      key = TraceKey(*filters.workload, *filters.policy);
    } catch (const Error&) {
      throw Error(ErrorCode::BundleNotFound,
                  fmt::format("no trace for workload '{}' and policy '{}'", *filters.workload,
                              *filters.policy));
    }
    bundle = &store.at(key);
  } else {
    std::vector<TraceKey> candidates;
    for (const auto& k : store.keys()) {
      if (filters.workload && k.workload() != *filters.workload) continue;
      if (filters.policy && k.policy() != *filters.policy) continue;
      candidates.push_back(k);
    }
    if (candidates.empty()) {
      throw Error(ErrorCode::BundleNotFound,
                  fmt::format("no trace matches {}", filters.describe()));
    }
    if (candidates.size() > 1) {
      std::vector<std::string> ids;
      for (const auto& k : candidates) ids.push_back(k.canonical_id());
      throw Error(ErrorCode::AmbiguousBundle,
                  fmt::format("{} traces match ({}); name a workload and a policy",
                              candidates.size(), fmt::join(ids, ", ")));
    }
    bundle = &store.at(candidates.front());
  }

  ContextBundle out;
  out.provenance.key = bundle->key;
  out.provenance.filters = filters;
  out.provenance.filters.workload = bundle->key.workload();
  out.provenance.filters.policy = bundle->key.policy();
  out.provenance.excerpt_cap = excerpt_cap;
  out.metadata_summary = bundle->metadata;
  std::tie(out.workload_description, out.policy_description) = split_description(bundle->description);

  const auto& records = bundle->records;
  if (filters.has_record_filters()) {
    std::vector<std::size_t> matched;
    if (!filters.pcs.empty() && !filters.addresses.empty()) {
      for (auto pc : filters.pcs)
        for (auto addr : filters.addresses)
          for (auto i : store.lookup(bundle->key, pc, addr))
            if (filters.matches(records[i])) matched.push_back(i);
      std::sort(matched.begin(), matched.end());
    } else {
      for (std::size_t i = 0; i < records.size(); ++i)
        if (filters.matches(records[i])) matched.push_back(i);
    }
    out.provenance.matched_records = matched.size();
    for (std::size_t n = 0; n < matched.size() && n < excerpt_cap; ++n) {
      out.excerpt_indices.push_back(matched[n]);
      out.trace_excerpt.push_back(records[matched[n]]);
    }
  }

  for (auto pc : filters.pcs) {
    PcContext ctx;
    ctx.pc = pc;
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const AccessRecord& r) { return r.program_counter == pc; });
    if (it != records.end()) {
      ctx.function_name = it->function_name;
      ctx.assembly_code = it->assembly_code;
      ctx.function_code = it->function_code;
      ctx.stats = pc_stats(records, pc);
    }
    out.pc_context.push_back(std::move(ctx));
  }
  return out;
}

std::string render_context(const ContextBundle& b) {
  std::string out;
  auto line = [&out](std::string_view s) {
    out += s;
    out += '\n';
  };
  const auto& prov = b.provenance;
  line(fmt::format("Trace: {}", prov.key.canonical_id()));
  line(fmt::format("Filters: {}", prov.filters.describe()));
  line(fmt::format("Workload: {}", b.workload_description));
  line(fmt::format("Replacement Policy: {}", b.policy_description));

  if (prov.filters.has_record_filters()) {
    if (prov.truncated()) {
      line(fmt::format("Matching accesses: {} (showing first {})", prov.matched_records,
                       b.trace_excerpt.size()));
    } else {
      line(fmt::format("Matching accesses: {}", prov.matched_records));
    }
  }
  for (std::size_t n = 0; n < b.trace_excerpt.size(); ++n) {
    const auto& r = b.trace_excerpt[n];
    const auto idx = n < b.excerpt_indices.size() ? b.excerpt_indices[n] : n;
    line(fmt::format("Access #{}: PC {}, address {}, set {} -> Cache result: {}", idx,
                     to_hex(r.program_counter), to_hex(r.memory_address), r.cache_set_id,
                     to_string(r.evict)));
    if (r.is_miss()) line(fmt::format("  Miss type: {}", to_string(r.miss_type)));
    line(fmt::format("  Recency: {}; reuse: {}", r.accessed_address_recency(),
                     r.accessed_address_reuse_distance()));
    if (r.evicted_address) {
      line(fmt::format("  Evicted {} ({}); inserted line {}; {}", to_hex(*r.evicted_address),
                       r.evicted_address_reuse_distance(), r.accessed_address_reuse_distance(),
                       is_wrong_eviction(r.evicted_address_reuse_distance_numeric,
                                         r.accessed_address_reuse_distance_numeric)
                           ? "wrong eviction"
                           : "eviction not wrong"));
    }
    line(fmt::format("  Current cache lines: {}", line_refs(r.current_cache_lines)));
    line(fmt::format("  Recent access history: {}", line_refs(r.recent_access_history)));
    std::vector<std::string> scores;
    for (const auto& s : r.cache_line_eviction_scores)
      scores.push_back(fmt::format("{}={}", to_hex(s.address), s.score));
    if (!scores.empty()) line(fmt::format("  Eviction scores: {}", fmt::join(scores, " ")));
  }
  if (prov.filters.has_record_filters() && prov.matched_records == 0) {
    std::vector<std::string> what;
    for (auto pc : prov.filters.pcs) what.push_back("PC " + to_hex(pc));
    for (auto a : prov.filters.addresses) what.push_back("address " + to_hex(a));
    line(what.empty() ? std::string(kNotFoundSentinel)
                      : fmt::format("{} for {}.", kNotFoundSentinel, fmt::join(what, ", ")));
  }

  for (const auto& ctx : b.pc_context) {
    const auto pc = to_hex(ctx.pc);
    if (!ctx.stats) {
      line(fmt::format("PC {} does not appear in this trace.", pc));
      continue;
    }
    const auto& s = *ctx.stats;
    line(fmt::format("The miss rate for PC {} is {:.2f}%.", pc, s.miss_rate));
    line(fmt::format("PC {} appeared {} times in this trace.", pc, s.accesses));
    line(fmt::format("PC {}: {} hits, {} misses, {} evictions, {} wrong evictions.", pc, s.hits,
                     s.misses, s.eviction_count, s.wrong_evictions));
    if (s.mean_reuse_distance)
      line(fmt::format("PC {} mean reuse distance: {:.2f} accesses.", pc, *s.mean_reuse_distance));
    if (!ctx.function_name.empty()) line(fmt::format("Function for PC {}: {}", pc, ctx.function_name));
    if (!ctx.assembly_code.empty()) {
      line(fmt::format("Assembly for PC {}:", pc));
      line("```");
      line(ctx.assembly_code);
      line("```");
    }
    if (!ctx.function_code.empty()) line(fmt::format("Source for PC {}: {}", pc, ctx.function_code));
  }
  line(fmt::format("Metadata: {}", b.metadata_summary));
  return out;
}

ContextBundle sieve_query(const TraceStore& store, std::string_view question,
                          std::size_t excerpt_cap, const NameRanker& ranker) {
  const auto workloads = store.workloads();
  const auto policies = store.policies();
  return retrieve(store, parse_query(question, workloads, policies, ranker), excerpt_cap);
}

}  // namespace cachescope
