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

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "cachescope/simulator.hpp"
#include "cachescope/trace_model.hpp"
#include "json.hpp"

namespace cachescope {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kMetadataFile = "metadata.txt";
constexpr const char* kDescriptionFile = "description.txt";

template <typename T>
ojson optional_number(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

ojson to_json(const AccessRecord& r) {
  ojson j;
  j["program_counter"] = to_hex(r.program_counter);
  j["memory_address"] = to_hex(r.memory_address);
  j["cache_set_id"] = r.cache_set_id;
  j["evict"] = to_string(r.evict);
  j["miss_type"] = to_string(r.miss_type);
  j["evicted_address"] = r.evicted_address ? ojson(to_hex(*r.evicted_address)) : ojson(nullptr);
  j["accessed_address_recency"] = r.accessed_address_recency();
  j["accessed_address_reuse_distance"] = r.accessed_address_reuse_distance();
  j["evicted_address_reuse_distance"] = r.evicted_address_reuse_distance();
  j["function_name"] = r.function_name;
  j["function_code"] = r.function_code;
  j["assembly_code"] = r.assembly_code;
  ojson lines = ojson::array();
  for (const auto& l : r.current_cache_lines) lines.push_back({to_hex(l.pc), to_hex(l.address)});
  j["current_cache_lines"] = std::move(lines);
  ojson hist = ojson::array();
  for (const auto& l : r.recent_access_history) hist.push_back({to_hex(l.pc), to_hex(l.address)});
  j["recent_access_history"] = std::move(hist);
  ojson scores = ojson::array();
  for (const auto& s : r.cache_line_eviction_scores) scores.push_back({to_hex(s.address), s.score});
  j["cache_line_eviction_scores"] = std::move(scores);
  ojson addrs = ojson::array();
  for (auto a : r.current_cache_line_addresses) addrs.push_back(to_hex(a));
  j["current_cache_line_addresses"] = std::move(addrs);
  j["evicted_address_reuse_distance_numeric"] =
      optional_number(r.evicted_address_reuse_distance_numeric);
  j["accessed_address_reuse_distance_numeric"] =
      optional_number(r.accessed_address_reuse_distance_numeric);
  j["accessed_address_recency_numeric"] = optional_number(r.accessed_address_recency_numeric);
  j["is_miss"] = r.is_miss() ? 1 : 0;
  for (const auto& [name, raw] : r.extensions) j[name] = ojson::parse(raw);
  return j;
}

struct FieldError {
  std::string message;
};

Address hex_field(const ojson& v, std::string_view name) {
  if (!v.is_string()) throw FieldError{fmt::format("'{}' must be a 0x-hex string", name)};
  auto parsed = parse_hex(v.get<std::string>());
  if (!parsed) throw FieldError{fmt::format("'{}' is not valid 0x-hex", name)};
  return *parsed;
}

std::optional<std::uint64_t> optional_count(const ojson& v, std::string_view name) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw FieldError{fmt::format("'{}' must be a non-negative integer or null", name)};
  return v.get<std::uint64_t>();
}

std::vector<LineRef> line_refs(const ojson& v, std::string_view name) {
  if (!v.is_array()) throw FieldError{fmt::format("'{}' must be an array", name)};
  std::vector<LineRef> out;
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 2)
      throw FieldError{fmt::format("'{}' entries must be [pc, address] pairs", name)};
    out.push_back({hex_field(e[0], name), hex_field(e[1], name)});
  }
  return out;
}

std::string string_field(const ojson& v, std::string_view name) {
  if (!v.is_string()) throw FieldError{fmt::format("'{}' must be a string", name)};
  return v.get<std::string>();
}

AccessRecord from_json(const ojson& j) {
  if (!j.is_object()) throw FieldError{"record must be a JSON object"};
  AccessRecord r;
  bool has_pc = false, has_addr = false, has_evict = false;
  std::optional<int> is_miss;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    if (k == "program_counter") {
      r.program_counter = hex_field(v, k);
      has_pc = true;
    } else if (k == "memory_address") {
      r.memory_address = hex_field(v, k);
      has_addr = true;
    } else if (k == "cache_set_id") {
      if (!v.is_number_unsigned()) throw FieldError{"'cache_set_id' must be an unsigned integer"};
      r.cache_set_id = v.get<std::uint32_t>();
    } else if (k == "evict") {
      auto o = v.is_string() ? parse_outcome(v.get<std::string>()) : std::nullopt;
      if (!o) throw FieldError{"'evict' must be \"Cache Hit\" or \"Cache Miss\""};
      r.evict = *o;
      has_evict = true;
    } else if (k == "miss_type") {
      auto t = v.is_string() ? parse_miss_type(v.get<std::string>()) : std::nullopt;
      if (!t) throw FieldError{"'miss_type' must be None, Compulsory, Capacity or Conflict"};
      r.miss_type = *t;
    } else if (k == "evicted_address") {
      if (!v.is_null()) r.evicted_address = hex_field(v, k);
    } else if (k == "accessed_address_recency" || k == "accessed_address_reuse_distance" ||
               k == "evicted_address_reuse_distance") {
      // rendered from the numeric columns
    } else if (k == "function_name") {
      r.function_name = string_field(v, k);
    } else if (k == "function_code") {
      r.function_code = string_field(v, k);
    } else if (k == "assembly_code") {
      r.assembly_code = string_field(v, k);
    } else if (k == "current_cache_lines") {
      r.current_cache_lines = line_refs(v, k);
    } else if (k == "recent_access_history") {
      r.recent_access_history = line_refs(v, k);
    } else if (k == "cache_line_eviction_scores") {
      if (!v.is_array()) throw FieldError{"'cache_line_eviction_scores' must be an array"};
      for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2 || !e[1].is_number_integer())
          throw FieldError{"'cache_line_eviction_scores' entries must be [address, score]"};
        r.cache_line_eviction_scores.push_back({hex_field(e[0], k), e[1].get<std::int64_t>()});
      }
    } else if (k == "current_cache_line_addresses") {
      if (!v.is_array()) throw FieldError{"'current_cache_line_addresses' must be an array"};
      for (const auto& e : v) r.current_cache_line_addresses.push_back(hex_field(e, k));
    } else if (k == "evicted_address_reuse_distance_numeric") {
      r.evicted_address_reuse_distance_numeric = optional_count(v, k);
    } else if (k == "accessed_address_reuse_distance_numeric") {
      r.accessed_address_reuse_distance_numeric = optional_count(v, k);
    } else if (k == "accessed_address_recency_numeric") {
      r.accessed_address_recency_numeric = optional_count(v, k);
    } else if (k == "is_miss") {
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
        throw FieldError{"'is_miss' must be 0 or 1"};
      is_miss = v.get<int>();
    } else {
      r.extensions[k] = v.dump();
    }
  }
  if (!has_pc || !has_addr || !has_evict)
    throw FieldError{"record needs program_counter, memory_address and evict"};
  if (is_miss && (*is_miss == 1) != r.is_miss())
    throw FieldError{"'is_miss' disagrees with 'evict'"};
  if ((r.miss_type == MissType::None) != (r.evict == Outcome::Hit))
    throw FieldError{"'miss_type' must be None exactly for hits"};
  if (r.evicted_address && r.evict != Outcome::Miss)
    throw FieldError{"a hit cannot evict a line"};
  return r;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed for {}", path.string()));
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_opt(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : "";
}

}  // namespace

std::string record_to_json(const AccessRecord& record) { return to_json(record).dump(); }

void write_records_jsonl(std::span<const AccessRecord> records, std::ostream& out) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

RecordTable read_records_jsonl(std::istream& in, std::string_view source) {
  RecordTable out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      const std::size_t at = line_offset + (e.byte > 0 ? e.byte - 1 : 0);
      throw Error(ErrorCode::FormatError,
                  fmt::format("{}: line {}, byte offset {}: malformed JSON record", source,
                              line_no, at),
                  at);
    }
    try {
      out.push_back(from_json(j));
    } catch (const FieldError& e) {
      throw Error(ErrorCode::FormatError,
                  fmt::format("{}: line {}, byte offset {}: {}", source, line_no, line_offset,
                              e.message),
                  line_offset);
    }
  }
  return out;
}

void save_bundle(const TraceBundle& bundle, const fs::path& store_dir) {
  const auto dir = store_dir / bundle.key.canonical_id();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  {
    std::ofstream out(dir / kRecordsFile, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", (dir / kRecordsFile).string()));
    write_records_jsonl(bundle.records, out);
    if (!out) throw Error(ErrorCode::IoError, "write failed for records.jsonl");
  }
  write_text_file(dir / kMetadataFile, bundle.metadata);
  write_text_file(dir / kDescriptionFile, bundle.description);
}

TraceBundle load_bundle(const fs::path& bundle_dir) {
  TraceBundle bundle;
  try {
    bundle.key = TraceKey::parse(bundle_dir.filename().string());
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError,
                fmt::format("bundle directory {}: {}", bundle_dir.string(), e.what()));
  }
  const auto records_path = bundle_dir / kRecordsFile;
  std::ifstream in(records_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", records_path.string()));
  bundle.records = read_records_jsonl(in, records_path.string());
  bundle.metadata = read_text_file(bundle_dir / kMetadataFile);
  bundle.description = read_text_file(bundle_dir / kDescriptionFile);
  if (!metadata_consistent(bundle)) {
    throw Error(ErrorCode::FormatError,
                fmt::format("{}: metadata counters do not match the {} records loaded "
                            "(truncated or edited file?)",
                            bundle_dir.string(), bundle.records.size()));
  }
  return bundle;
}

void save_store(const TraceStore& store, const fs::path& store_dir) {
  std::error_code ec;
  fs::create_directories(store_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot create {}", store_dir.string()));
  for (const auto& key : store.keys()) save_bundle(store.at(key), store_dir);
}

TraceStore load_store(const fs::path& store_dir) {
  std::error_code ec;
  if (!fs::is_directory(store_dir, ec))
    throw Error(ErrorCode::IoError, fmt::format("{} is not a directory", store_dir.string()));
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(store_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / kRecordsFile)) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  TraceStore store;
  for (const auto& d : dirs) store.put_bundle(load_bundle(d));
  return store;
}

void export_csv(const TraceBundle& bundle, std::ostream& out) {
  out << "program_counter,memory_address,cache_set_id,evict,miss_type,evicted_address,"
         "accessed_address_recency,accessed_address_reuse_distance,"
         "evicted_address_reuse_distance,function_name,function_code,assembly_code,"
         "current_cache_lines,recent_access_history,cache_line_eviction_scores,"
         "current_cache_line_addresses,evicted_address_reuse_distance_numeric,"
         "accessed_address_reuse_distance_numeric,accessed_address_recency_numeric,is_miss\n";
  auto pairs = [](const std::vector<LineRef>& v) {
    std::vector<std::string> parts;
    for (const auto& l : v) parts.push_back(fmt::format("({} {})", to_hex(l.pc), to_hex(l.address)));
    return fmt::format("{}", fmt::join(parts, ";"));
  };
  for (const auto& r : bundle.records) {
    std::vector<std::string> scores, addrs;
    for (const auto& s : r.cache_line_eviction_scores)
      scores.push_back(fmt::format("({} {})", to_hex(s.address), s.score));
    for (auto a : r.current_cache_line_addresses) addrs.push_back(to_hex(a));
    out << to_hex(r.program_counter) << ',' << to_hex(r.memory_address) << ',' << r.cache_set_id
        << ',' << to_string(r.evict) << ',' << to_string(r.miss_type) << ','
        << (r.evicted_address ? to_hex(*r.evicted_address) : "") << ','
        << csv_escape(r.accessed_address_recency()) << ','
        << csv_escape(r.accessed_address_reuse_distance()) << ','
        << csv_escape(r.evicted_address_reuse_distance()) << ',' << csv_escape(r.function_name)
        << ',' << csv_escape(r.function_code) << ',' << csv_escape(r.assembly_code) << ','
        << csv_escape(pairs(r.current_cache_lines)) << ','
        << csv_escape(pairs(r.recent_access_history)) << ','
        << csv_escape(fmt::format("{}", fmt::join(scores, ";"))) << ','
        << csv_escape(fmt::format("{}", fmt::join(addrs, ";"))) << ','
        << csv_opt(r.evicted_address_reuse_distance_numeric) << ','
        << csv_opt(r.accessed_address_reuse_distance_numeric) << ','
        << csv_opt(r.accessed_address_recency_numeric) << ',' << (r.is_miss() ? 1 : 0) << '\n';
  }
}

}  // namespace cachescope
