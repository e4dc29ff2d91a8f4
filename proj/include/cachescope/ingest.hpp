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

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cachescope/simulator.hpp"
#include "cachescope/trace_model.hpp"

namespace cachescope {

/// Text trace: one `<pc_hex> <address_hex>` per line, `#` starts a comment.
/// Throws Error(ParseError) whose position is the 1-based line number.
std::vector<Access> parse_trace(std::istream& in, std::string_view source = "<stream>");
std::vector<Access> parse_trace_file(const std::filesystem::path& path);
void write_trace(std::span<const Access> trace, std::ostream& out);

struct SymbolInfo {
  std::string function_name;
  std::string assembly_code;
  std::string function_code;
  friend bool operator==(const SymbolInfo&, const SymbolInfo&) = default;
};

using SymbolMap = std::map<Address, SymbolInfo>;

struct SymbolMapLoad {
  SymbolMap symbols;
  std::vector<std::string> warnings;  // duplicate PCs (last entry wins)
};

/// JSONL sidecar: {"pc": "0x409270", "function_name": ..., "assembly_code": ...,
/// "function_code": ...}. Throws Error(ParseError) with the line number.
SymbolMapLoad parse_symbol_map(std::istream& in, std::string_view source = "<stream>");
SymbolMapLoad load_symbol_map(const std::filesystem::path& path);
void write_symbol_map(const SymbolMap& symbols, std::ostream& out);

/// Fills function_name/function_code/assembly_code from the map; PCs not in
/// the map get empty strings. Nothing else changes.
RecordTable enrich(RecordTable records, const SymbolMap& symbols);
TraceBundle enrich(TraceBundle bundle, const SymbolMap& symbols);

}  // namespace cachescope
