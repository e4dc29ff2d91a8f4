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

#include "cachescope/ingest.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "json.hpp"

namespace cachescope {

std::vector<Access> parse_trace(std::istream& in, std::string_view source) {
  std::vector<Access> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:{}: expected '<pc_hex> <address_hex>', got {} fields", source,
                              line_no, tokens.size()),
                  line_no);
    }
    auto pc = parse_hex(tokens[0], false);
    auto address = parse_hex(tokens[1], false);
    if (!pc || !address) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:{}: malformed hex '{}'", source, line_no,
                              pc ? tokens[1] : tokens[0]),
                  line_no);
    }
    out.push_back({*pc, *address});
  }
  return out;
}

std::vector<Access> parse_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  return parse_trace(in, path.string());
}

void write_trace(std::span<const Access> trace, std::ostream& out) {
  for (const auto& a : trace) out << to_hex(a.pc) << ' ' << to_hex(a.address) << '\n';
}

SymbolMapLoad parse_symbol_map(std::istream& in, std::string_view source) {
  SymbolMapLoad result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](std::string_view why) {
      return Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", source, line_no, why), line_no);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw fail("malformed JSON");
    }
    if (!j.is_object() || !j.contains("pc") || !j["pc"].is_string()) throw fail("missing \"pc\"");
    auto pc = parse_hex(j["pc"].get<std::string>());
    if (!pc) throw fail("\"pc\" is not 0x-hex");
    SymbolInfo info;
    for (auto [field, target] : {std::pair{"function_name", &info.function_name},
                                 std::pair{"assembly_code", &info.assembly_code},
                                 std::pair{"function_code", &info.function_code}}) {
      if (!j.contains(field)) continue;
      if (!j[field].is_string()) throw fail(fmt::format("\"{}\" must be a string", field));
      *target = j[field].get<std::string>();
    }
    if (result.symbols.count(*pc)) {
      result.warnings.push_back(fmt::format("{}:{}: duplicate entry for PC {} (last wins)", source,
                                            line_no, to_hex(*pc)));
    }
    result.symbols[*pc] = std::move(info);
  }
  return result;
}

SymbolMapLoad load_symbol_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  return parse_symbol_map(in, path.string());
}

void write_symbol_map(const SymbolMap& symbols, std::ostream& out) {
  for (const auto& [pc, info] : symbols) {
    nlohmann::ordered_json j;
    j["pc"] = to_hex(pc);
    j["function_name"] = info.function_name;
    j["assembly_code"] = info.assembly_code;
    j["function_code"] = info.function_code;
    out << j.dump() << '\n';
  }
}

RecordTable enrich(RecordTable records, const SymbolMap& symbols) {
  for (auto& r : records) {
    auto it = symbols.find(r.program_counter);
    if (it == symbols.end()) {
      r.function_name.clear();
      r.assembly_code.clear();
      r.function_code.clear();
    } else {
      r.function_name = it->second.function_name;
      r.assembly_code = it->second.assembly_code;
      r.function_code = it->second.function_code;
    }
  }
  return records;
}

TraceBundle enrich(TraceBundle bundle, const SymbolMap& symbols) {
  bundle.records = enrich(std::move(bundle.records), symbols);
  return bundle;
}

}  // namespace cachescope
