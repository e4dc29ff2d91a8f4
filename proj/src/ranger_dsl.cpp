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

#include "cachescope/ranger_dsl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <regex>

#include <fmt/format.h>

#include "cachescope/errors.hpp"

namespace cachescope::dsl {

namespace {

// ---------------------------------------------------------------- columns

std::string render_refs(const std::vector<LineRef>& refs) {
  std::vector<std::string> parts;
  for (const auto& r : refs) parts.push_back(fmt::format("({}, {})", to_hex(r.pc), to_hex(r.address)));
  return fmt::format("[{}]", fmt::join(parts, ", "));
}

Value opt_value(const std::optional<std::uint64_t>& v) {
  if (!v) return std::monostate{};
  return *v;
}

Value column_value(const AccessRecord& r, std::string_view c) {
  if (c == "program_counter") return r.program_counter;
  if (c == "memory_address") return r.memory_address;
  if (c == "cache_set_id") return std::uint64_t{r.cache_set_id};
  if (c == "evict") return std::string(to_string(r.evict));
  if (c == "miss_type") return std::string(to_string(r.miss_type));
  if (c == "evicted_address") return opt_value(r.evicted_address);
  if (c == "accessed_address_recency") return r.accessed_address_recency();
  if (c == "accessed_address_reuse_distance") return r.accessed_address_reuse_distance();
  if (c == "evicted_address_reuse_distance") return r.evicted_address_reuse_distance();
  if (c == "function_name") return r.function_name;
  if (c == "function_code") return r.function_code;
  if (c == "assembly_code") return r.assembly_code;
  if (c == "current_cache_lines") return render_refs(r.current_cache_lines);
  if (c == "recent_access_history") return render_refs(r.recent_access_history);
  if (c == "cache_line_eviction_scores") {
    std::vector<std::string> parts;
    for (const auto& s : r.cache_line_eviction_scores)
      parts.push_back(fmt::format("({}, {})", to_hex(s.address), s.score));
    return fmt::format("[{}]", fmt::join(parts, ", "));
  }
  if (c == "current_cache_line_addresses") {
    std::vector<std::string> parts;
    for (auto a : r.current_cache_line_addresses) parts.push_back(to_hex(a));
    return fmt::format("[{}]", fmt::join(parts, ", "));
  }
  if (c == "evicted_address_reuse_distance_numeric")
    return opt_value(r.evicted_address_reuse_distance_numeric);
  if (c == "accessed_address_reuse_distance_numeric")
    return opt_value(r.accessed_address_reuse_distance_numeric);
  if (c == "accessed_address_recency_numeric") return opt_value(r.accessed_address_recency_numeric);
  if (c == "is_miss") return std::uint64_t{r.is_miss() ? 1u : 0u};
  return std::monostate{};
}

bool numeric_type(ColumnType t) {
  return t == ColumnType::Hex || t == ColumnType::Int || t == ColumnType::Bool;
}

// ---------------------------------------------------------------- lexer

enum class Tok { Ident, Int, Real, Hex, String, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier, symbol, or decoded string
  Value value;
  std::size_t pos = 0;
};

[[noreturn]] void parse_fail(std::size_t pos, const std::string& msg) {
  throw Error(ErrorCode::ParseError, fmt::format("position {}: {}", pos, msg), pos);
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return fmt::format("string \"{}\"", t.text);
    default: return fmt::format("'{}'", t.text);
  }
}

bool word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '.';
}

std::vector<Token> lex(std::string_view s) {
  static const std::regex real_re(R"(-?[0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?)");
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (c == '"') {
      ++i;
      std::string text;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          const char e = s[i + 1];
          text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          i += 2;
        } else if (s[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          text += s[i++];
        }
      }
      if (!closed) parse_fail(t.pos, "unterminated string literal");
      t.kind = Tok::String;
      t.text = std::move(text);
      t.value = t.text;
      out.push_back(std::move(t));
      continue;
    }
    // Two-byte and UTF-8 comparison operators.
    static const std::pair<std::string_view, std::string_view> kOps[] = {
        {"\xE2\x89\xA0", "!="}, {"\xE2\x89\xA4", "<="}, {"\xE2\x89\xA5", ">="}, {"==", "="},
        {"!=", "!="},           {"<=", "<="},           {">=", ">="},           {"<>", "!="}};
    bool matched = false;
    for (const auto& [spelling, canonical] : kOps) {
      if (s.substr(i, spelling.size()) == spelling) {
        t.kind = Tok::Symbol;
        t.text = canonical;
        i += spelling.size();
        matched = true;
        break;
      }
    }
    if (matched) {
      out.push_back(std::move(t));
      continue;
    }
    if (std::string_view("|/(),=<>").find(c) != std::string_view::npos) {
      t.kind = Tok::Symbol;
      t.text = std::string(1, c);
      ++i;
      out.push_back(std::move(t));
      continue;
    }
    const bool negative = c == '-' && i + 1 < s.size() && s[i + 1] >= '0' && s[i + 1] <= '9';
    if (negative || word_char(c)) {
      std::size_t j = i + (negative ? 1 : 0);
      while (j < s.size() && word_char(s[j])) ++j;
      // Exponent sign: 1.5e-07
      if (j + 1 < s.size() && (s[j - 1] == 'e' || s[j - 1] == 'E') && (s[j] == '+' || s[j] == '-') &&
          s[j + 1] >= '0' && s[j + 1] <= '9' && s[i + (negative ? 1 : 0)] >= '0' &&
          s[i + (negative ? 1 : 0)] <= '9') {
        ++j;
        while (j < s.size() && word_char(s[j])) ++j;
      }
      std::string word(s.substr(i, j - i));
      i = j;
      t.text = word;
      const std::string_view body = negative ? std::string_view(word).substr(1) : std::string_view(word);
      const bool all_digits = std::all_of(body.begin(), body.end(), [](char d) { return d >= '0' && d <= '9'; });
      const auto dots = std::count(body.begin(), body.end(), '.');
      if (!negative && body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
        auto v = parse_hex(body);
        if (!v) parse_fail(t.pos, fmt::format("malformed hex literal '{}'", word));
        t.kind = Tok::Hex;
        t.value = *v;
      } else if (all_digits && !negative) {
        if (body.size() > 19) parse_fail(t.pos, fmt::format("integer literal '{}' is too large", word));
        t.kind = Tok::Int;
        t.value = static_cast<std::uint64_t>(std::stoull(std::string(body)));
      } else if (std::regex_match(word, real_re)) {
        t.kind = Tok::Real;
        try {
          t.value = std::stod(word);
        } catch (const std::out_of_range&) {
          parse_fail(t.pos, fmt::format("number '{}' is out of range", word));
        }
      } else if (dots == 0 && !negative) {
        t.kind = Tok::Ident;
      } else {
        parse_fail(t.pos, fmt::format("malformed token '{}'", word));
      }
      out.push_back(std::move(t));
      continue;
    }
    parse_fail(i, fmt::format("unexpected character '{}'", c));
  }
  Token end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------- parser

struct Positions {
  std::vector<std::size_t> stages;
  std::size_t emit = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(lex(text)) {}

  QueryProgram program(Positions& pos) {
    QueryProgram p;
    const auto& head = peek();
    if (is_word(head, "from")) {
      next();
    } else if (is_word(head, "metadata")) {
      next();
      p.source.metadata = true;
    } else {
      fail_expected("'from' or 'metadata'");
    }
    source_name(p.source);
    bool have_emit = false;
    while (peek().kind != Tok::End) {
      expect_symbol("|");
      const auto& kw = peek();
      if (kw.kind != Tok::Ident) fail_expected("a stage keyword");
      if (have_emit) parse_fail(kw.pos, "'emit' must be the last stage");
      const std::size_t at = kw.pos;
      if (kw.text == "emit") {
        next();
        p.emit = string_lit("an emit template");
        pos.emit = at;
        have_emit = true;
        continue;
      }
      p.stages.push_back(stage());
      pos.stages.push_back(at);
    }
    if (!have_emit) parse_fail(peek().pos, "expected '| emit \"...\"' before end of input");
    return p;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

  static bool is_word(const Token& t, std::string_view w) { return t.kind == Tok::Ident && t.text == w; }

  [[noreturn]] void fail_expected(std::string_view what) const {
    parse_fail(peek().pos, fmt::format("expected {} but found {}", what, describe(peek())));
  }

  void expect_symbol(std::string_view s) {
    if (peek().kind != Tok::Symbol || peek().text != s) fail_expected(fmt::format("'{}'", s));
    next();
  }

  std::string ident(std::string_view what) {
    if (peek().kind != Tok::Ident) fail_expected(what);
    return next().text;
  }

  std::string string_lit(std::string_view what) {
    if (peek().kind != Tok::String) fail_expected(what);
    return next().text;
  }

  std::string column() {
    const auto& t = peek();
    if (t.kind != Tok::Ident) fail_expected("a column name");
    if (!find_column(t.text))
      throw Error(ErrorCode::SchemaError,
                  fmt::format("position {}: unknown column '{}'", t.pos, t.text), t.pos);
    return next().text;
  }

  void source_name(Source& src) {
    const auto& t = peek();
    if (t.kind != Tok::Ident && t.kind != Tok::Int) fail_expected("a trace name like mcf/lru");
    const std::size_t at = t.pos;
    std::string first = next().text;
    if (peek().kind == Tok::Symbol && peek().text == "/") {
      next();
      const auto& p = peek();
      if (p.kind != Tok::Ident && p.kind != Tok::Int) fail_expected("a policy name after '/'");
      src.workload = std::move(first);
      src.policy = next().text;
    } else {
      try {
        auto key = TraceKey::parse(first);
        src.workload = key.workload();
        src.policy = key.policy();
      } catch (const Error&) {
        parse_fail(at, fmt::format("'{}' is not a trace name; write <workload>/<policy>", first));
      }
    }
    if (!TraceKey::valid_identifier(src.workload) || !TraceKey::valid_identifier(src.policy))
      parse_fail(at, "trace names use lowercase letters, digits and '_'");
  }

  Literal literal() {
    const auto& t = peek();
    Literal lit;
    switch (t.kind) {
      case Tok::Int:
      case Tok::Real:
      case Tok::String: lit.value = t.value; break;
      case Tok::Hex:
        lit.value = t.value;
        lit.hex = true;
        break;
      case Tok::Ident:
        if (t.text == "true") lit.value = std::uint64_t{1};
        else if (t.text == "false") lit.value = std::uint64_t{0};
        else if (t.text == "null") lit.value = std::monostate{};
        else fail_expected("a literal (number, 0x-hex, \"string\", true, false, null)");
        break;
      default: fail_expected("a literal (number, 0x-hex, \"string\", true, false, null)");
    }
    next();
    return lit;
  }

  Stage stage() {
    const std::string kw = next().text;
    if (kw == "filter") {
      Filter f;
      f.column = column();
      if (is_word(peek(), "in")) {
        next();
        f.in = true;
        expect_symbol("(");
        f.values.push_back(literal());
        while (peek().kind == Tok::Symbol && peek().text == ",") {
          next();
          f.values.push_back(literal());
        }
        expect_symbol(")");
        return f;
      }
      const auto& op = peek();
      static const std::map<std::string, Op> kOps{{"=", Op::Eq}, {"!=", Op::Ne}, {"<", Op::Lt},
                                                  {"<=", Op::Le}, {">", Op::Gt}, {">=", Op::Ge}};
      auto it = op.kind == Tok::Symbol ? kOps.find(op.text) : kOps.end();
      if (it == kOps.end()) fail_expected("a comparison (=, !=, <, <=, >, >=) or 'in'");
      next();
      f.op = it->second;
      f.values.push_back(literal());
      return f;
    }
    if (kw == "group_by") return GroupBy{column()};
    if (kw == "aggregate") {
      static const std::map<std::string, AggFn> kFns{
          {"count", AggFn::Count}, {"sum", AggFn::Sum}, {"mean", AggFn::Mean}, {"std", AggFn::Std},
          {"min", AggFn::Min},     {"max", AggFn::Max}, {"rate_pct", AggFn::RatePct}};
      const auto& t = peek();
      auto it = t.kind == Tok::Ident ? kFns.find(t.text) : kFns.end();
      if (it == kFns.end()) fail_expected("an aggregate (count, sum, mean, std, min, max, rate_pct)");
      next();
      Aggregate a{it->second, ""};
      if (a.fn == AggFn::Count && peek().kind != Tok::Ident) return a;
      a.column = column();
      return a;
    }
    if (kw == "sort") {
      Sort s;
      const auto& t = peek();
      if (t.kind == Tok::Int) {
        s.key = Sort::Key::Aggregate;
        s.aggregate = static_cast<std::size_t>(std::get<std::uint64_t>(t.value));
        next();
      } else if (is_word(t, "key")) {
        s.key = Sort::Key::GroupKey;
        next();
      } else {
        s.key = Sort::Key::Column;
        s.column = column();
      }
      if (is_word(peek(), "desc")) {
        s.descending = true;
        next();
      } else if (is_word(peek(), "asc")) {
        next();
      }
      return s;
    }
    if (kw == "limit") {
      if (peek().kind != Tok::Int) fail_expected("a non-negative integer");
      return Limit{std::get<std::uint64_t>(next().value)};
    }
    if (kw == "extract") return Extract{string_lit("a quoted regex")};
    parse_fail(toks_[i_ - 1].pos,
               fmt::format("unknown stage '{}'; expected filter, group_by, aggregate, sort, limit, "
                           "extract or emit",
                           kw));
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

// ------------------------------------------------------------ placeholders

struct Piece {
  bool placeholder = false;
  std::string text;
};

std::vector<Piece> split_template(std::string_view t, std::optional<std::size_t> pos) {
  std::vector<Piece> out;
  std::string lit;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char c = t[i];
    if (c == '{' && i + 1 < t.size() && t[i + 1] == '{') {
      lit += '{';
      ++i;
    } else if (c == '}' && i + 1 < t.size() && t[i + 1] == '}') {
      lit += '}';
      ++i;
    } else if (c == '{') {
      const auto close = t.find('}', i);
      if (close == std::string_view::npos)
        throw Error(ErrorCode::ParseError, "emit template has an unclosed '{'", pos);
      if (!lit.empty()) out.push_back({false, std::move(lit)});
      lit.clear();
      out.push_back({true, std::string(t.substr(i + 1, close - i - 1))});
      i = close;
    } else if (c == '}') {
      throw Error(ErrorCode::ParseError, "emit template has a stray '}'; write '}}'", pos);
    } else {
      lit += c;
    }
  }
  if (!lit.empty()) out.push_back({false, std::move(lit)});
  return out;
}

bool is_index(std::string_view s) {
  return !s.empty() && s.size() < 4 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_global(std::string_view s) { return s == "metadata" || s == "description" || s == "trace"; }

// ------------------------------------------------------------ validation

void validate_impl(const QueryProgram& p, const Positions* pos) {
  auto at = [&](std::size_t i) -> std::optional<std::size_t> {
    if (pos && i < pos->stages.size()) return pos->stages[i];
    return std::nullopt;
  };
  const std::optional<std::size_t> emit_at = pos ? std::optional(pos->emit) : std::nullopt;
  auto fail = [](ErrorCode code, std::optional<std::size_t> where, const std::string& msg) {
    throw Error(code, where ? fmt::format("position {}: {}", *where, msg) : msg, where);
  };
  auto need_column = [&](const std::string& name, std::optional<std::size_t> where) {
    auto info = find_column(name);
    if (!info) fail(ErrorCode::SchemaError, where, fmt::format("unknown column '{}'", name));
    if (info->type == ColumnType::List)
      fail(ErrorCode::SchemaError, where,
           fmt::format("column '{}' is a list; it can only be shown with {{{}}} in emit", name, name));
    return *info;
  };
  if (!TraceKey::valid_identifier(p.source.workload) || !TraceKey::valid_identifier(p.source.policy))
    fail(ErrorCode::ParseError, std::nullopt, "source needs a <workload>/<policy> trace name");

  std::size_t outputs = 0;  // aggregates or extracts
  bool grouped = false, aggregated = false;
  for (std::size_t i = 0; i < p.stages.size(); ++i) {
    const auto& st = p.stages[i];
    if (p.source.metadata) {
      const auto* ex = std::get_if<Extract>(&st);
      if (!ex) fail(ErrorCode::ParseError, at(i), "a metadata source only allows extract stages");
      if (ex->pattern.size() > kMaxPatternLength)
        fail(ErrorCode::ParseError, at(i), fmt::format("regex longer than {} characters", kMaxPatternLength));
      std::regex re;
      try {
        re = std::regex(ex->pattern);
      } catch (const std::regex_error& e) {
        fail(ErrorCode::ParseError, at(i), fmt::format("invalid regex: {}", e.what()));
      }
      if (re.mark_count() != 1)
        fail(ErrorCode::ParseError, at(i), "extract regex needs exactly one capture group");
      ++outputs;
      continue;
    }
    if (std::holds_alternative<Extract>(st))
      fail(ErrorCode::ParseError, at(i), "extract only applies to a 'metadata' source");
    if (const auto* f = std::get_if<Filter>(&st)) {
      if (grouped || aggregated)
        fail(ErrorCode::ParseError, at(i), "filter stages must come before group_by and aggregate");
      const auto info = need_column(f->column, at(i));
      if (f->values.empty()) fail(ErrorCode::ParseError, at(i), "filter needs a literal");
      if (!f->in && f->values.size() != 1) fail(ErrorCode::ParseError, at(i), "comparison takes one literal");
      for (const auto& lit : f->values) {
        const bool null = std::holds_alternative<std::monostate>(lit.value);
        const bool text = std::holds_alternative<std::string>(lit.value);
        if (null) continue;
        if (numeric_type(info.type) == text)
          fail(ErrorCode::SchemaError, at(i),
               fmt::format("column '{}' holds {} values", f->column, text ? "numeric" : "text"));
      }
    } else if (const auto* g = std::get_if<GroupBy>(&st)) {
      if (grouped || aggregated)
        fail(ErrorCode::ParseError, at(i), "group_by must come once, before aggregate");
      need_column(g->column, at(i));
      grouped = true;
    } else if (const auto* a = std::get_if<Aggregate>(&st)) {
      if (a->column.empty()) {
        if (a->fn != AggFn::Count) fail(ErrorCode::ParseError, at(i), "only count may omit the column");
      } else {
        const auto info = need_column(a->column, at(i));
        const bool needs_number = a->fn == AggFn::Sum || a->fn == AggFn::Mean || a->fn == AggFn::Std;
        if (needs_number && !numeric_type(info.type))
          fail(ErrorCode::SchemaError, at(i),
               fmt::format("{} needs a numeric column; '{}' is text", to_string(a->fn), a->column));
      }
      aggregated = true;
      ++outputs;
    } else if (const auto* s = std::get_if<Sort>(&st)) {
      switch (s->key) {
        case Sort::Key::Column:
          if (grouped || aggregated)
            fail(ErrorCode::ParseError, at(i), "after group_by or aggregate, sort by 'key' or an aggregate index");
          need_column(s->column, at(i));
          break;
        case Sort::Key::GroupKey:
          if (!grouped) fail(ErrorCode::ParseError, at(i), "'sort key' needs a group_by first");
          break;
        case Sort::Key::Aggregate:
          if (!grouped) fail(ErrorCode::ParseError, at(i), "sorting by an aggregate needs a group_by first");
          if (s->aggregate >= outputs)
            fail(ErrorCode::ParseError, at(i), fmt::format("no aggregate {} defined yet", s->aggregate));
          break;
      }
    } else if (std::holds_alternative<Limit>(st)) {
      if (aggregated && !grouped)
        fail(ErrorCode::ParseError, at(i), "limit after an ungrouped aggregate has nothing to limit");
    }
  }

  for (const auto& piece : split_template(p.emit, emit_at)) {
    if (!piece.placeholder) continue;
    const auto& name = piece.text;
    if (is_global(name)) continue;
    if (is_index(name)) {
      if (std::stoul(name) >= outputs)
        fail(ErrorCode::ParseError, emit_at, fmt::format("placeholder {{{}}} has no matching output", name));
      continue;
    }
    if (name == "key") {
      if (!grouped) fail(ErrorCode::ParseError, emit_at, "placeholder {key} needs a group_by");
      continue;
    }
    if (!find_column(name))
      fail(ErrorCode::SchemaError, emit_at, fmt::format("unknown column '{}' in emit template", name));
    if (p.source.metadata || grouped || aggregated)
      fail(ErrorCode::ParseError, emit_at,
           fmt::format("column placeholder {{{}}} is only valid without group_by/aggregate", name));
  }
}

// ------------------------------------------------------------ evaluation

struct Cell {
  Value value;
  bool hex = false;
};

std::string render(const Cell& c) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "none";
        else if constexpr (std::is_same_v<T, std::uint64_t>) return c.hex ? to_hex(v) : fmt::format("{}", v);
        else if constexpr (std::is_same_v<T, double>) return fmt::format("{:.2f}", v);
        else return v;
      },
      c.value);
}

/// -1, 0, 1; nulls sort first.
int compare_values(const Value& a, const Value& b) {
  const bool an = std::holds_alternative<std::monostate>(a), bn = std::holds_alternative<std::monostate>(b);
  if (an || bn) return an == bn ? 0 : (an ? -1 : 1);
  if (const auto* as = std::get_if<std::string>(&a)) {
    const auto* bs = std::get_if<std::string>(&b);
    if (!bs) return 1;
    return *as < *bs ? -1 : (*as > *bs ? 1 : 0);
  }
  if (std::holds_alternative<std::string>(b)) return -1;
  const auto* au = std::get_if<std::uint64_t>(&a);
  const auto* bu = std::get_if<std::uint64_t>(&b);
  if (au && bu) return *au < *bu ? -1 : (*au > *bu ? 1 : 0);
  const double ad = au ? static_cast<double>(*au) : std::get<double>(a);
  const double bd = bu ? static_cast<double>(*bu) : std::get<double>(b);
  return ad < bd ? -1 : (ad > bd ? 1 : 0);
}

bool test(const Value& row, Op op, const Value& lit) {
  const bool rn = std::holds_alternative<std::monostate>(row), ln = std::holds_alternative<std::monostate>(lit);
  if (rn || ln) {
    if (op == Op::Eq) return rn && ln;
    if (op == Op::Ne) return rn != ln;
    return false;
  }
  const int c = compare_values(row, lit);
  switch (op) {
    case Op::Eq: return c == 0;
    case Op::Ne: return c != 0;
    case Op::Lt: return c < 0;
    case Op::Le: return c <= 0;
    case Op::Gt: return c > 0;
    case Op::Ge: return c >= 0;
  }
  return false;
}

bool truthy(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return false;
  if (const auto* u = std::get_if<std::uint64_t>(&v)) return *u != 0;
  if (const auto* d = std::get_if<double>(&v)) return *d != 0;
  return !std::get<std::string>(v).empty();
}

Cell aggregate(const Aggregate& a, const RecordTable& recs, const std::vector<std::size_t>& rows) {
  if (a.column.empty()) return {std::uint64_t{rows.size()}, false};
  const auto info = *find_column(a.column);
  std::vector<Value> vals;
  vals.reserve(rows.size());
  for (auto i : rows) {
    auto v = column_value(recs[i], a.column);
    if (a.fn == AggFn::RatePct || !std::holds_alternative<std::monostate>(v)) vals.push_back(std::move(v));
  }
  auto as_double = [](const Value& v) {
    if (const auto* u = std::get_if<std::uint64_t>(&v)) return static_cast<double>(*u);
    return std::get<double>(v);
  };
  switch (a.fn) {
    case AggFn::Count: return {std::uint64_t{vals.size()}, false};
    case AggFn::Sum: {
      std::uint64_t s = 0;
      for (const auto& v : vals) s += std::get<std::uint64_t>(v);
      return {s, false};
    }
    case AggFn::Mean: {
      if (vals.empty()) return {};
      double s = 0;
      for (const auto& v : vals) s += as_double(v);
      return {s / static_cast<double>(vals.size()), false};
    }
    case AggFn::Std: {
      if (vals.size() < 2) return {};
      double m = 0;
      for (const auto& v : vals) m += as_double(v);
      m /= static_cast<double>(vals.size());
      double ss = 0;
      for (const auto& v : vals) ss += (as_double(v) - m) * (as_double(v) - m);
      return {std::sqrt(ss / static_cast<double>(vals.size() - 1)), false};
    }
    case AggFn::Min:
    case AggFn::Max: {
      if (vals.empty()) return {};
      auto cmp = [](const Value& x, const Value& y) { return compare_values(x, y) < 0; };
      const auto it = a.fn == AggFn::Min ? std::min_element(vals.begin(), vals.end(), cmp)
                                         : std::max_element(vals.begin(), vals.end(), cmp);
      return {*it, info.type == ColumnType::Hex};
    }
    case AggFn::RatePct: {
      if (vals.empty()) return {};
      const auto n = std::count_if(vals.begin(), vals.end(), truthy);
      return {100.0 * static_cast<double>(n) / static_cast<double>(vals.size()), false};
    }
  }
  return {};
}

std::string describe_filters(const QueryProgram& p) {
  std::vector<std::string> parts;
  for (const auto& st : p.stages)
    if (const auto* f = std::get_if<Filter>(&st)) {
      QueryProgram one;
      one.stages.push_back(*f);
      auto text = pretty_print(one);
      const auto at = text.find("filter ");
      const auto end = text.find(" | emit");
      parts.push_back(text.substr(at + 7, end - at - 7));
    }
  return parts.empty() ? "the trace" : fmt::format("{}", fmt::join(parts, " and "));
}

constexpr std::size_t kMaxRenderedRows = 1000;

std::string literal_text(const Literal& l) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "null";
        else if constexpr (std::is_same_v<T, std::uint64_t>) return l.hex ? to_hex(v) : fmt::format("{}", v);
        else if constexpr (std::is_same_v<T, double>) {
          auto s = fmt::format("{}", v);
          if (s.find_first_of(".en") == std::string::npos) s += ".0";
          return s;
        } else {
          std::string out = "\"";
          for (char c : v) {
            if (c == '"' || c == '\\') out += '\\';
            if (c == '\n') {
              out += "\\n";
              continue;
            }
            if (c == '\t') {
              out += "\\t";
              continue;
            }
            out += c;
          }
          return out + "\"";
        }
      },
      l.value);
}

}  // namespace

const std::vector<ColumnInfo>& columns() {
  static const std::vector<ColumnInfo> kColumns{
      {"program_counter", ColumnType::Hex},
      {"memory_address", ColumnType::Hex},
      {"cache_set_id", ColumnType::Int},
      {"evict", ColumnType::Text},
      {"miss_type", ColumnType::Text},
      {"evicted_address", ColumnType::Hex},
      {"accessed_address_recency", ColumnType::Text},
      {"accessed_address_reuse_distance", ColumnType::Text},
      {"evicted_address_reuse_distance", ColumnType::Text},
      {"function_name", ColumnType::Text},
      {"function_code", ColumnType::Text},
      {"assembly_code", ColumnType::Text},
      {"current_cache_lines", ColumnType::List},
      {"recent_access_history", ColumnType::List},
      {"cache_line_eviction_scores", ColumnType::List},
      {"current_cache_line_addresses", ColumnType::List},
      {"evicted_address_reuse_distance_numeric", ColumnType::Int},
      {"accessed_address_reuse_distance_numeric", ColumnType::Int},
      {"accessed_address_recency_numeric", ColumnType::Int},
      {"is_miss", ColumnType::Bool},
  };
  return kColumns;
}

std::optional<ColumnInfo> find_column(std::string_view name) {
  for (const auto& c : columns())
    if (c.name == name) return c;
  return std::nullopt;
}

std::string_view to_string(AggFn fn) {
  switch (fn) {
    case AggFn::Count: return "count";
    case AggFn::Sum: return "sum";
    case AggFn::Mean: return "mean";
    case AggFn::Std: return "std";
    case AggFn::Min: return "min";
    case AggFn::Max: return "max";
    case AggFn::RatePct: return "rate_pct";
  }
  return "count";
}

QueryProgram parse_program(std::string_view text) {
  Positions pos;
  Parser parser(text);
  auto p = parser.program(pos);
  validate_impl(p, &pos);
  return p;
}

void validate(const QueryProgram& program) { validate_impl(program, nullptr); }

std::string pretty_print(const QueryProgram& p) {
  std::string out = fmt::format("{} {}/{}", p.source.metadata ? "metadata" : "from", p.source.workload,
                                p.source.policy);
  static constexpr std::string_view kOps[] = {"=", "!=", "<", "<=", ">", ">="};
  for (const auto& st : p.stages) {
    out += " | ";
    if (const auto* f = std::get_if<Filter>(&st)) {
      if (f->in) {
        std::vector<std::string> vals;
        for (const auto& v : f->values) vals.push_back(literal_text(v));
        out += fmt::format("filter {} in ({})", f->column, fmt::join(vals, ", "));
      } else {
        out += fmt::format("filter {} {} {}", f->column, kOps[static_cast<int>(f->op)],
                           f->values.empty() ? std::string("null") : literal_text(f->values.front()));
      }
    } else if (const auto* g = std::get_if<GroupBy>(&st)) {
      out += "group_by " + g->column;
    } else if (const auto* a = std::get_if<Aggregate>(&st)) {
      out += fmt::format("aggregate {}", to_string(a->fn));
      if (!a->column.empty()) out += " " + a->column;
    } else if (const auto* s = std::get_if<Sort>(&st)) {
      out += "sort ";
      out += s->key == Sort::Key::Column    ? s->column
             : s->key == Sort::Key::GroupKey ? std::string("key")
                                             : fmt::format("{}", s->aggregate);
      out += s->descending ? " desc" : " asc";
    } else if (const auto* l = std::get_if<Limit>(&st)) {
      out += fmt::format("limit {}", l->n);
    } else if (const auto* e = std::get_if<Extract>(&st)) {
      out += "extract " + literal_text({e->pattern, false});
    }
  }
  out += " | emit " + literal_text({p.emit, false});
  return out;
}

EvalResult evaluate(const QueryProgram& p, const TraceStore& store) {
  validate(p);
  const TraceKey key(p.source.workload, p.source.policy);
  const auto& bundle = store.at(key);
  const auto pieces = split_template(p.emit, std::nullopt);

  auto fill = [&](const std::function<std::string(const std::string&)>& lookup) {
    std::string out;
    for (const auto& piece : pieces) {
      if (!piece.placeholder) out += piece.text;
      else if (piece.text == "metadata") out += bundle.metadata;
      else if (piece.text == "description") out += bundle.description;
      else if (piece.text == "trace") out += key.canonical_id();
      else out += lookup(piece.text);
    }
    return out;
  };

  if (p.source.metadata) {
    std::vector<std::string> captures;
    for (const auto& st : p.stages) {
      const auto& ex = std::get<Extract>(st);
      std::smatch m;
      const std::regex re(ex.pattern);
      if (!std::regex_search(bundle.metadata, m, re)) {
        return {fmt::format("Not found: the pattern \"{}\" does not match the metadata of {}.",
                            ex.pattern, key.canonical_id()),
                true};
      }
      captures.push_back(m[1].str());
    }
    return {fill([&](const std::string& name) { return captures.at(std::stoul(name)); }), false};
  }

  const auto& recs = bundle.records;
  std::vector<std::size_t> rows(recs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

  struct Group {
    Cell key;
    std::vector<std::size_t> rows;
    std::vector<Cell> aggs;
  };
  std::optional<std::vector<Group>> groups;
  std::vector<Cell> scalars;
  bool filtered_empty_checked = false;

  auto not_found = [&] {
    return EvalResult{fmt::format("Not found: no records in {} match {}.", key.canonical_id(),
                                  describe_filters(p)),
                      true};
  };

  for (const auto& st : p.stages) {
    if (const auto* f = std::get_if<Filter>(&st)) {
      std::vector<std::size_t> kept;
      for (auto i : rows) {
        const auto v = column_value(recs[i], f->column);
        bool ok = false;
        if (f->in) {
          for (const auto& lit : f->values) ok = ok || test(v, Op::Eq, lit.value);
        } else {
          ok = test(v, f->op, f->values.front().value);
        }
        if (ok) kept.push_back(i);
      }
      rows = std::move(kept);
      continue;
    }
    if (!filtered_empty_checked) {
      filtered_empty_checked = true;
      if (rows.empty()) return not_found();
    }
    if (const auto* g = std::get_if<GroupBy>(&st)) {
      const bool hex = find_column(g->column)->type == ColumnType::Hex;
      std::vector<std::pair<Value, std::size_t>> keyed;
      for (auto i : rows) keyed.emplace_back(column_value(recs[i], g->column), i);
      std::stable_sort(keyed.begin(), keyed.end(),
                       [](const auto& a, const auto& b) { return compare_values(a.first, b.first) < 0; });
      groups.emplace();
      for (auto& [v, i] : keyed) {
        if (groups->empty() || compare_values(groups->back().key.value, v) != 0)
          groups->push_back({{v, hex}, {}, {}});
        groups->back().rows.push_back(i);
      }
    } else if (const auto* a = std::get_if<Aggregate>(&st)) {
      if (groups) {
        for (auto& gr : *groups) gr.aggs.push_back(aggregate(*a, recs, gr.rows));
      } else {
        scalars.push_back(aggregate(*a, recs, rows));
      }
    } else if (const auto* s = std::get_if<Sort>(&st)) {
      if (groups) {
        std::stable_sort(groups->begin(), groups->end(), [&](const Group& x, const Group& y) {
          const auto& xv = s->key == Sort::Key::GroupKey ? x.key.value : x.aggs[s->aggregate].value;
          const auto& yv = s->key == Sort::Key::GroupKey ? y.key.value : y.aggs[s->aggregate].value;
          const int c = compare_values(xv, yv);
          return s->descending ? c > 0 : c < 0;
        });
      } else {
        std::vector<std::pair<Value, std::size_t>> keyed;
        for (auto i : rows) keyed.emplace_back(column_value(recs[i], s->column), i);
        std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& x, const auto& y) {
          const int c = compare_values(x.first, y.first);
          return s->descending ? c > 0 : c < 0;
        });
        for (std::size_t n = 0; n < rows.size(); ++n) rows[n] = keyed[n].second;
      }
    } else if (const auto* l = std::get_if<Limit>(&st)) {
      if (groups) {
        if (groups->size() > l->n) groups->resize(l->n);
      } else if (rows.size() > l->n) {
        rows.resize(l->n);
      }
    }
  }
  if (!filtered_empty_checked && rows.empty()) return not_found();
  if (groups && groups->empty()) return not_found();
  if (!groups && rows.empty() && scalars.empty()) return not_found();

  if (groups) {
    std::vector<std::string> parts;
    for (const auto& g : *groups) {
      parts.push_back(fill([&](const std::string& name) {
        return name == "key" ? render(g.key) : render(g.aggs.at(std::stoul(name)));
      }));
      if (parts.size() == kMaxRenderedRows) {
        parts.push_back(fmt::format("... ({} more)", groups->size() - kMaxRenderedRows));
        break;
      }
    }
    return {fmt::format("{}", fmt::join(parts, ", ")), false};
  }
  if (!scalars.empty()) {
    return {fill([&](const std::string& name) { return render(scalars.at(std::stoul(name))); }), false};
  }
  const bool per_row = std::any_of(pieces.begin(), pieces.end(), [](const Piece& pc) {
    return pc.placeholder && !is_global(pc.text);
  });
  if (!per_row) return {fill([](const std::string&) { return std::string(); }), false};
  std::vector<std::string> parts;
  for (auto i : rows) {
    parts.push_back(fill([&](const std::string& name) {
      return render({column_value(recs[i], name), find_column(name)->type == ColumnType::Hex});
    }));
    if (parts.size() == kMaxRenderedRows) {
      parts.push_back(fmt::format("... ({} more)", rows.size() - kMaxRenderedRows));
      break;
    }
  }
  return {fmt::format("{}", fmt::join(parts, ", ")), false};
}

}  // namespace cachescope::dsl
