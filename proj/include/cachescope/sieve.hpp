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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cachescope/stats.hpp"
#include "cachescope/trace_model.hpp"

namespace cachescope {

/// Lowercased word tokens; `0x` hex literals stay whole.
std::vector<std::string> tokenize(std::string_view text);

struct NameScore {
  double similarity = 0;  // [0, 1]
  std::size_t matched_parts = 0;
};

class NameRanker {
 public:
  virtual ~NameRanker() = default;
  virtual NameScore score(std::span<const std::string> query_tokens,
                          std::string_view candidate) const = 0;
};

/// Each `_`-separated part of the candidate takes its best edit-distance
/// similarity against the query tokens; the score is the mean over parts.
/// An exact whole-name token scores 1.
class LexicalNameRanker final : public NameRanker {
 public:
  NameScore score(std::span<const std::string> query_tokens,
                  std::string_view candidate) const override;
};

inline constexpr double kNameThreshold = 0.6;

/// Levenshtein distance normalised to [0, 1] similarity.
double edit_similarity(std::string_view a, std::string_view b);

/// Never fails; an unanchored query yields empty filters. Workload and policy
/// are left absent when no known name scores above kNameThreshold or when
/// the best two tie.
QueryFilters parse_query(std::string_view text, std::span<const std::string> known_workloads,
                         std::span<const std::string> known_policies,
                         const NameRanker& ranker = LexicalNameRanker{});

struct PcContext {
  Address pc = 0;
  std::string function_name;
  std::string assembly_code;
  std::string function_code;
  std::optional<PcStats> stats;  // absent when the PC is not in the bundle
};

struct Provenance {
  TraceKey key;
  QueryFilters filters;
  std::size_t matched_records = 0;
  std::size_t excerpt_cap = 0;

  bool truncated() const { return matched_records > excerpt_cap; }
};

struct ContextBundle {
  RecordTable trace_excerpt;
  std::vector<std::size_t> excerpt_indices;  // positions in the source bundle
  std::vector<PcContext> pc_context;
  std::string workload_description;
  std::string policy_description;
  std::string metadata_summary;
  Provenance provenance;
};

inline constexpr std::size_t kDefaultExcerptCap = 32;

/// Throws BundleNotFound when no bundle matches the workload/policy
/// filters, AmbiguousBundle when several do and none is named exactly.
ContextBundle retrieve(const TraceStore& store, const QueryFilters& filters,
                       std::size_t excerpt_cap = kDefaultExcerptCap);

inline constexpr std::string_view kNotFoundSentinel = "Exact PC, Memory Address match not found";

std::string render_context(const ContextBundle& bundle);

/// parse_query against the store's names, then retrieve.
ContextBundle sieve_query(const TraceStore& store, std::string_view question,
                          std::size_t excerpt_cap = kDefaultExcerptCap,
                          const NameRanker& ranker = LexicalNameRanker{});

}  // namespace cachescope
