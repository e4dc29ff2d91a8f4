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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cachescope/trace_model.hpp"

// A closed pipeline language over one trace bundle. Grammar in docs/dsl.md.
//
//   from mcf/lru | filter program_counter = 0x4037ba | aggregate rate_pct is_miss
//     | emit "The miss rate for PC 0x4037ba is {0}%."

namespace cachescope::dsl {

enum class ColumnType { Hex, Int, Bool, Text, List };

struct ColumnInfo {
  std::string_view name;
  ColumnType type;
};

/// Every AccessRecord column, in schema order.
const std::vector<ColumnInfo>& columns();
std::optional<ColumnInfo> find_column(std::string_view name);

using Value = std::variant<std::monostate, std::uint64_t, double, std::string>;

struct Literal {
  Value value;
  bool hex = false;  // written as 0x...
  friend bool operator==(const Literal&, const Literal&) = default;
};

enum class Op { Eq, Ne, Lt, Le, Gt, Ge };

struct Filter {
  std::string column;
  Op op = Op::Eq;
  bool in = false;  // `in (a, b)`; op is unused
  std::vector<Literal> values;
  friend bool operator==(const Filter&, const Filter&) = default;
};

struct GroupBy {
  std::string column;
  friend bool operator==(const GroupBy&, const GroupBy&) = default;
};

enum class AggFn { Count, Sum, Mean, Std, Min, Max, RatePct };
std::string_view to_string(AggFn fn);

struct Aggregate {
  AggFn fn = AggFn::Count;
  std::string column;  // empty only for a bare `count`
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct Sort {
  enum class Key { Column, GroupKey, Aggregate };
  Key key = Key::Column;
  std::string column;
  std::size_t aggregate = 0;
  bool descending = false;
  friend bool operator==(const Sort&, const Sort&) = default;
};

struct Limit {
  std::uint64_t n = 0;
  friend bool operator==(const Limit&, const Limit&) = default;
};

struct Extract {
  std::string pattern;
  friend bool operator==(const Extract&, const Extract&) = default;
};

using Stage = std::variant<Filter, GroupBy, Aggregate, Sort, Limit, Extract>;

struct Source {
  bool metadata = false;
  std::string workload;
  std::string policy;
  friend bool operator==(const Source&, const Source&) = default;
};

struct QueryProgram {
  Source source;
  std::vector<Stage> stages;
  std::string emit;
  friend bool operator==(const QueryProgram&, const QueryProgram&) = default;
};

inline constexpr std::size_t kMaxPatternLength = 200;

/// Throws ParseError (position = byte offset, message names what was
/// expected) or SchemaError (message names the column).
QueryProgram parse_program(std::string_view text);

/// Stage ordering, column types, placeholders and regex shape. Throws like
/// parse_program; positions are absent.
void validate(const QueryProgram& program);

/// Canonical single-line form; parse_program(pretty_print(p)) == p.
std::string pretty_print(const QueryProgram& program);

struct EvalResult {
  std::string text;
  bool empty = false;  // nothing matched; `text` is a not-found message
};

/// Validates first. Throws BundleNotFound for an unknown trace.
EvalResult evaluate(const QueryProgram& program, const TraceStore& store);

}  // namespace cachescope::dsl
