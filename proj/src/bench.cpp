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

#include "cachescope/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "cachescope/errors.hpp"
#include "cachescope/generator.hpp"
#include "cachescope/ranger.hpp"
#include "cachescope/sieve.hpp"
#include "json.hpp"

namespace cachescope {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
    {Category::HitMiss, "HitMiss"},
    {Category::MissRate, "MissRate"},
    {Category::PolicyComparison, "PolicyComparison"},
    {Category::Count, "Count"},
    {Category::Arithmetic, "Arithmetic"},
    {Category::Trick, "Trick"},
    {Category::MicroarchConcepts, "MicroarchConcepts"},
    {Category::CodeGeneration, "CodeGeneration"},
    {Category::PolicyAnalysis, "PolicyAnalysis"},
    {Category::WorkloadAnalysis, "WorkloadAnalysis"},
    {Category::SemanticAnalysis, "SemanticAnalysis"},
};

struct LineError {
  std::string message;
};

std::vector<std::string> string_list(const json& j, const char* field) {
  if (!j.contains(field)) return {};
  if (!j[field].is_array()) throw LineError{fmt::format("\"{}\" must be an array", field)};
  std::vector<std::string> out;
  for (const auto& v : j[field]) {
    if (!v.is_string()) throw LineError{fmt::format("\"{}\" must hold strings", field)};
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string required_string(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string() || j[field].get<std::string>().empty())
    throw LineError{fmt::format("missing or empty \"{}\"", field)};
  return j[field].get<std::string>();
}

Expected parse_expected(const json& j) {
  if (!j.is_object()) throw LineError{"\"expected\" must be an object"};
  const auto kind = required_string(j, "kind");
  if (kind == "label") {
    LabelExpected e{string_list(j, "accepted"), string_list(j, "choices")};
    if (e.accepted.empty() || e.choices.empty()) throw LineError{"label needs \"accepted\" and \"choices\""};
    for (const auto& a : e.accepted)
      if (std::find(e.choices.begin(), e.choices.end(), a) == e.choices.end())
        throw LineError{fmt::format("accepted label '{}' is not among the choices", a)};
    return e;
  }
  if (kind == "numeric") {
    if (!j.contains("value") || !j["value"].is_number()) throw LineError{"numeric needs a \"value\""};
    NumericExpected e;
    e.value = j["value"].get<double>();
    e.unit = j.value("unit", "");
    e.tolerance = j.value("tolerance", e.unit == "%" ? 0.05 : 0.0);
    if (e.tolerance < 0) throw LineError{"tolerance must be >= 0"};
    return e;
  }
  if (kind == "trick") return TrickExpected{required_string(j, "premise"), string_list(j, "reject_patterns")};
  if (kind == "rubric") return RubricExpected{required_string(j, "reference"), string_list(j, "criteria")};
  throw LineError{fmt::format("unknown expected kind '{}'", kind)};
}

Grounding parse_grounding(const json& j) {
  Grounding g;
  if (j.is_null()) return g;
  if (!j.is_object()) throw LineError{"\"grounding\" must be an object"};
  if (j.contains("trace")) {
    try {
      g.trace = TraceKey::parse(j.at("trace").get<std::string>());
    } catch (const std::exception& e) {
      throw LineError{fmt::format("bad grounding trace: {}", e.what())};
    }
    g.filters.workload = g.trace->workload();
    g.filters.policy = g.trace->policy();
  }
  for (const auto& s : string_list(j, "pcs")) {
    auto v = parse_hex(s);
    if (!v) throw LineError{fmt::format("grounding pc '{}' is not 0x-hex", s)};
    g.filters.pcs.push_back(*v);
  }
  for (const auto& s : string_list(j, "addresses")) {
    auto v = parse_hex(s);
    if (!v) throw LineError{fmt::format("grounding address '{}' is not 0x-hex", s)};
    g.filters.addresses.push_back(*v);
  }
  return g;
}

BenchQuestion parse_question(const json& j) {
  if (!j.is_object()) throw LineError{"each line must be a JSON object"};
  BenchQuestion q;
  q.id = required_string(j, "id");
  const auto tier = parse_tier(required_string(j, "tier"));
  if (!tier) throw LineError{fmt::format("unknown tier '{}'", j["tier"].get<std::string>())};
  const auto cat = parse_category(required_string(j, "category"));
  if (!cat) throw LineError{fmt::format("unknown category '{}'", j["category"].get<std::string>())};
  q.tier = *tier;
  q.category = *cat;
  if (tier_of(q.category) != q.tier)
    throw LineError{fmt::format("category {} belongs to tier {}, not {}", to_string(q.category),
                                to_string(tier_of(q.category)), to_string(q.tier))};
  q.text = required_string(j, "text");
  if (!j.contains("expected")) throw LineError{"missing \"expected\""};
  q.expected = parse_expected(j["expected"]);
  const bool rubric = std::holds_alternative<RubricExpected>(q.expected);
  const bool trick = std::holds_alternative<TrickExpected>(q.expected);
  if (q.tier == Tier::ARA && !rubric) throw LineError{"ARA questions need a rubric expectation"};
  if (q.tier == Tier::TG && rubric) throw LineError{"TG questions cannot use a rubric expectation"};
  if ((q.category == Category::Trick) != trick)
    throw LineError{"Trick questions, and only they, use a trick expectation"};
  q.grounding = parse_grounding(j.value("grounding", json()));
  return q;
}

}  // namespace

std::string_view to_string(Tier tier) { return tier == Tier::TG ? "TG" : "ARA"; }

std::string_view to_string(Category category) {
  for (const auto& [c, n] : kCategoryNames)
    if (c == category) return n;
  return "HitMiss";
}

std::optional<Tier> parse_tier(std::string_view name) {
  if (name == "TG") return Tier::TG;
  if (name == "ARA") return Tier::ARA;
  return std::nullopt;
}

std::optional<Category> parse_category(std::string_view name) {
  for (const auto& [c, n] : kCategoryNames)
    if (n == name) return c;
  return std::nullopt;
}

Tier tier_of(Category category) {
  return static_cast<int>(category) <= static_cast<int>(Category::Trick) ? Tier::TG : Tier::ARA;
}

const std::vector<Category>& all_categories() {
  static const std::vector<Category> kAll = [] {
    std::vector<Category> v;
    for (const auto& [c, _] : kCategoryNames) v.push_back(c);
    return v;
  }();
  return kAll;
}

std::map<Category, std::size_t> QuestionSuite::counts() const {
  std::map<Category, std::size_t> out;
  for (const auto& q : questions) ++out[q.category];
  return out;
}

QuestionSuite parse_questions(std::istream& in, std::string_view source) {
  QuestionSuite suite;
  std::set<std::string> ids;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw LineError{fmt::format("malformed JSON ({})", e.what())};
      }
      auto q = parse_question(j);
      if (!ids.insert(q.id).second) throw LineError{fmt::format("duplicate id '{}'", q.id)};
      suite.questions.push_back(std::move(q));
    } catch (const LineError& e) {
      throw Error(ErrorCode::SchemaError, fmt::format("{}:{}: {}", source, n, e.message), n);
    }
  }
  if (suite.questions.empty()) suite.warnings.push_back(fmt::format("{}: no questions", source));
  return suite;
}

QuestionSuite load_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  return parse_questions(in, path.string());
}

std::string question_to_json(const BenchQuestion& q) {
  ojson j;
  j["id"] = q.id;
  j["tier"] = to_string(q.tier);
  j["category"] = to_string(q.category);
  j["text"] = q.text;
  ojson e;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LabelExpected>) {
          e["kind"] = "label";
          e["accepted"] = x.accepted;
          e["choices"] = x.choices;
        } else if constexpr (std::is_same_v<T, NumericExpected>) {
          e["kind"] = "numeric";
          e["value"] = x.value;
          e["tolerance"] = x.tolerance;
          e["unit"] = x.unit;
        } else if constexpr (std::is_same_v<T, TrickExpected>) {
          e["kind"] = "trick";
          e["premise"] = x.premise;
          if (!x.reject_patterns.empty()) e["reject_patterns"] = x.reject_patterns;
        } else {
          e["kind"] = "rubric";
          e["reference"] = x.reference;
          e["criteria"] = x.criteria;
        }
      },
      q.expected);
  j["expected"] = e;
  ojson g = ojson::object();
  if (q.grounding.trace) g["trace"] = q.grounding.trace->canonical_id();
  if (!q.grounding.filters.pcs.empty()) {
    g["pcs"] = ojson::array();
    for (auto pc : q.grounding.filters.pcs) g["pcs"].push_back(to_hex(pc));
  }
  if (!q.grounding.filters.addresses.empty()) {
    g["addresses"] = ojson::array();
    for (auto a : q.grounding.filters.addresses) g["addresses"].push_back(to_hex(a));
  }
  j["grounding"] = g;
  return j.dump();
}

void write_questions(const std::vector<BenchQuestion>& questions, std::ostream& out) {
  for (const auto& q : questions) out << question_to_json(q) << '\n';
}

const std::vector<std::string>& default_reject_patterns() {
  static const std::vector<std::string> kPatterns{
      "does not appear", "doesn't appear", "do not appear", "not found", "no record",
      "no records",      "never accessed", "not present",   "no such",   "cannot find",
      "could not find",  "no match",       "false premise", "does not exist",
  };
  return kPatterns;
}

std::string normalize_text(std::string_view text) {
  std::string out = " ";
  for (char c : text) {
    const char l = static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    const bool keep = (l >= 'a' && l <= 'z') || (l >= '0' && l <= '9') || l == '\'';
    if (keep) out += l;
    else if (out.back() != ' ') out += ' ';
  }
  if (out.back() != ' ') out += ' ';
  return out;
}

std::optional<double> extract_number(std::string_view s, bool prefer_percent) {
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::optional<double> first, first_pct;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i]) || (i > 0 && (is_alpha(s[i - 1]) || is_digit(s[i - 1]) || s[i - 1] == '#' || s[i - 1] == '.'))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
      ++j;
      while (j < s.size() && is_digit(s[j])) ++j;
    }
    if (j < s.size() && is_alpha(s[j])) {  // 0x..., 2nd, 64B
      while (j < s.size() && (is_alpha(s[j]) || is_digit(s[j]))) ++j;
      i = j;
      continue;
    }
    double v = std::stod(std::string(s.substr(i, j - i)));
    if (i > 0 && s[i - 1] == '-' && (i == 1 || s[i - 2] == ' ')) v = -v;
    if (!first) first = v;
    std::size_t k = j;
    while (k < s.size() && s[k] == ' ') ++k;
    if (k < s.size() && s[k] == '%' && !first_pct) first_pct = v;
    i = j;
  }
  if (prefer_percent && first_pct) return first_pct;
  return first;
}

namespace {

/// Choices asserted by the answer; a choice nested inside a longer one that
/// also matched there is not counted.
std::set<std::string> mentioned_choices(std::string_view answer, const std::vector<std::string>& choices) {
  const auto na = normalize_text(answer);
  std::vector<std::string> sorted = choices;
  std::sort(sorted.begin(), sorted.end(), [](const std::string& a, const std::string& b) {
    return normalize_text(a).size() > normalize_text(b).size();
  });
  std::vector<bool> used(na.size(), false);
  std::set<std::string> out;
  for (const auto& c : sorted) {
    const auto nc = normalize_text(c);
    if (nc.size() <= 2) continue;
    for (auto at = na.find(nc); at != std::string::npos; at = na.find(nc, at + 1)) {
      // Inner characters only; the padding spaces may be shared.
      const bool overlaps = std::any_of(used.begin() + static_cast<std::ptrdiff_t>(at + 1),
                                        used.begin() + static_cast<std::ptrdiff_t>(at + nc.size() - 1),
                                        [](bool b) { return b; });
      if (overlaps) continue;
      out.insert(c);
      std::fill(used.begin() + static_cast<std::ptrdiff_t>(at + 1),
                used.begin() + static_cast<std::ptrdiff_t>(at + nc.size() - 1), true);
    }
  }
  return out;
}

}  // namespace

int score_tg(std::string_view answer, const Expected& expected) {
  if (const auto* l = std::get_if<LabelExpected>(&expected)) {
    const auto m = mentioned_choices(answer, l->choices);
    if (m.size() != 1) return 0;
    return std::find(l->accepted.begin(), l->accepted.end(), *m.begin()) != l->accepted.end() ? 1 : 0;
  }
  if (const auto* n = std::get_if<NumericExpected>(&expected)) {
    const auto v = extract_number(answer, n->unit == "%");
    if (!v) return 0;
    return std::fabs(*v - n->value) <= n->tolerance + 1e-9 ? 1 : 0;
  }
  if (const auto* t = std::get_if<TrickExpected>(&expected)) {
    const auto na = normalize_text(answer);
    const auto& patterns = t->reject_patterns.empty() ? default_reject_patterns() : t->reject_patterns;
    const bool rejects = std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
      return na.find(normalize_text(p)) != std::string::npos;
    });
    const bool verdict = na.find(" cache hit ") != std::string::npos ||
                         na.find(" cache miss ") != std::string::npos;
    const bool percentage = std::regex_search(std::string(answer), std::regex(R"([0-9]\s*%)"));
    return rejects && !verdict && !percentage ? 1 : 0;
  }
  throw Error(ErrorCode::SchemaError, "rubric expectations are scored by a judge, not score_tg");
}

ScoreFileJudge::ScoreFileJudge(std::map<std::string, int> scores) : scores_(std::move(scores)) {}

ScoreFileJudge ScoreFileJudge::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  std::map<std::string, int> scores;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      const int s = j.at("score").get<int>();
      if (s < 0 || s > 5) throw Error(ErrorCode::SchemaError, fmt::format("{}:{}: score out of 0..5", path.string(), n), n);
      scores[j.at("id").get<std::string>()] = s;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, fmt::format("{}:{}: {}", path.string(), n, e.what()), n);
    }
  }
  return ScoreFileJudge(std::move(scores));
}

JudgeResult ScoreFileJudge::judge(const BenchQuestion& q, std::string_view) {
  auto it = scores_.find(q.id);
  if (it == scores_.end()) throw Error(ErrorCode::JudgeError, fmt::format("no recorded score for '{}'", q.id));
  return {it->second, fmt::format("score file: {}", it->second)};
}

int parse_judge_score(std::string_view text) {
  static const std::regex re(R"(score\s*[:=]\s*([0-5])(?![0-9.]))", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, re))
    throw Error(ErrorCode::JudgeError, fmt::format("no 'Score: N' (0..5) in judge output: {}",
                                                   std::string(text.substr(0, 200))));
  return m[1].str()[0] - '0';
}

JudgeResult ModelJudge::judge(const BenchQuestion& q, std::string_view answer) {
  const auto* rubric = std::get_if<RubricExpected>(&q.expected);
  if (!rubric) throw Error(ErrorCode::JudgeError, fmt::format("question '{}' has no rubric", q.id));
  std::string criteria;
  for (const auto& c : rubric->criteria) criteria += "- " + c + "\n";
  const std::vector<ChatMessage> msgs{
      {"system", "You grade answers about cache behaviour from 0 to 5 for correctness, use of "
                 "evidence and clarity. End with a line 'Score: N'."},
      {"user", fmt::format("Question:\n{}\n\nReference answer:\n{}\n\nCriteria:\n{}\nAnswer to grade:\n{}\n",
                           q.text, rubric->reference, criteria.empty() ? "(none)\n" : criteria, answer)}};
  const auto out = client_.chat(msgs);
  return {parse_judge_score(out), out};
}

int score_ara(std::string_view answer, const BenchQuestion& q, Judge& judge, std::string* transcript) {
  auto r = judge.judge(q, answer);
  if (transcript) *transcript = r.transcript;
  return r.score;
}

double weighted_total(const std::vector<std::pair<double, std::size_t>>& per_category) {
  double num = 0;
  std::size_t den = 0;
  for (const auto& [acc, n] : per_category) {
    num += acc * static_cast<double>(n);
    den += n;
  }
  return den == 0 ? 0.0 : num / static_cast<double>(den);
}

namespace {

QuestionResult run_one(const TraceStore& store, const PipelineConfig& cfg, const BenchQuestion& q) {
  QuestionResult r;
  r.id = q.id;
  r.tier = q.tier;
  r.category = q.category;
  r.max_score = q.tier == Tier::TG ? 1 : 5;
  try {
    if (!cfg.answer_client) throw Error(ErrorCode::ConfigError, "no answer client configured");
    ModelClient& program_client = cfg.program_client ? *cfg.program_client : *cfg.answer_client;
    auto retrieval = retrieve_evidence(store, q.text, cfg.retriever, program_client, cfg.max_retries,
                                       cfg.excerpt_cap);
    r.retriever_used = retrieval.retriever_used;
    r.attempts = retrieval.attempts;
    const Evidence& ev = retrieval.evidence;
    ConversationMemory memory;
    const auto a = answer(q.text, ev, memory, *cfg.answer_client, cfg.shots);
    r.answer = a.text;
    r.provenance = a.provenance;
    if (q.tier == Tier::TG) {
      r.score = score_tg(a.text, q.expected);
    } else if (cfg.judge) {
      try {
        r.score = score_ara(a.text, q, *cfg.judge);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::JudgeError) throw;
        r.error = e.what();
      }
    } else {
      r.error = "no judge configured";
    }
  } catch (const Error& e) {
    r.error = fmt::format("{}: {}", to_string(e.code()), e.what());
    r.score = 0;
  }
  return r;
}

}  // namespace

BenchReport run_bench(const TraceStore& store, const PipelineConfig& config,
                      const std::vector<BenchQuestion>& questions) {
  std::vector<QuestionResult> results(questions.size());
  const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, questions.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < questions.size(); ++i) results[i] = run_one(store, config, questions[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < questions.size(); i = next++)
          results[i] = run_one(store, config, questions[i]);
      });
    }
    for (auto& th : pool) th.join();
  }
  return summarize_results(std::move(results));
}

BenchReport summarize_results(std::vector<QuestionResult> results) {
  BenchReport rep;
  rep.results = std::move(results);
  std::vector<std::pair<double, std::size_t>> tg, ara;
  for (auto c : all_categories()) {
    CategoryScore cs;
    cs.category = c;
    double sum = 0;
    for (const auto& r : rep.results) {
      if (r.category != c) continue;
      ++cs.count;
      if (r.score) sum += *r.score;
      else ++cs.unscored;
    }
    if (cs.count == 0) continue;
    const double max = tier_of(c) == Tier::TG ? 1.0 : 5.0;
    cs.accuracy_pct = 100.0 * sum / (max * static_cast<double>(cs.count));
    (tier_of(c) == Tier::TG ? tg : ara).emplace_back(cs.accuracy_pct, cs.count);
    rep.categories.push_back(cs);
  }
  rep.tg_total = weighted_total(tg);
  rep.ara_total = weighted_total(ara);
  return rep;
}

namespace {

std::string weight_vector(const BenchReport& rep, Tier tier) {
  std::vector<std::string> parts;
  for (const auto& c : rep.categories)
    if (tier_of(c.category) == tier) parts.push_back(fmt::format("{}={}", to_string(c.category), c.count));
  return fmt::format("{}", fmt::join(parts, " "));
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

std::string report_to_json(const BenchReport& rep) {
  ojson j;
  j["tg_total"] = round2(rep.tg_total);
  j["ara_total"] = round2(rep.ara_total);
  ojson weights = ojson::object();
  for (const auto& c : rep.categories) weights[std::string(to_string(c.category))] = c.count;
  j["weights"] = weights;
  j["categories"] = ojson::array();
  for (const auto& c : rep.categories) {
    j["categories"].push_back({{"category", to_string(c.category)},
                               {"tier", to_string(tier_of(c.category))},
                               {"count", c.count},
                               {"unscored", c.unscored},
                               {"accuracy_pct", round2(c.accuracy_pct)}});
  }
  j["results"] = ojson::array();
  for (const auto& r : rep.results) {
    ojson x;
    x["id"] = r.id;
    x["tier"] = to_string(r.tier);
    x["category"] = to_string(r.category);
    x["score"] = r.score ? ojson(*r.score) : ojson(nullptr);
    x["max_score"] = r.max_score;
    x["retriever"] = r.retriever_used;
    x["attempts"] = r.attempts;
    x["answer"] = r.answer;
    x["provenance"] = r.provenance;
    x["error"] = r.error;
    j["results"].push_back(std::move(x));
  }
  return j.dump(2) + "\n";
}

std::string report_to_csv(const BenchReport& rep) {
  auto esc = [](std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  };
  std::string out = "id,tier,category,score,max_score,retriever,attempts,error,answer\n";
  for (const auto& r : rep.results) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", esc(r.id), to_string(r.tier), to_string(r.category),
                       r.score ? fmt::format("{}", *r.score) : std::string(), r.max_score,
                       r.retriever_used, r.attempts, esc(r.error), esc(r.answer));
  }
  return out;
}

std::string report_to_text(const BenchReport& rep) {
  std::string out = fmt::format("{:<20} {:<4} {:>6} {:>9} {:>9}\n", "Category", "Tier", "Count", "Unscored", "Accuracy");
  for (const auto& c : rep.categories) {
    out += fmt::format("{:<20} {:<4} {:>6} {:>9} {:>8.2f}%\n", to_string(c.category),
                       to_string(tier_of(c.category)), c.count, c.unscored, c.accuracy_pct);
  }
  out += fmt::format("TG total  {:.2f}%  weights: {}\n", rep.tg_total, weight_vector(rep, Tier::TG));
  out += fmt::format("ARA total {:.2f}%  weights: {}\n", rep.ara_total, weight_vector(rep, Tier::ARA));
  return out;
}

}  // namespace cachescope
