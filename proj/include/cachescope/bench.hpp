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
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cachescope/generator.hpp"
#include "cachescope/model_client.hpp"
#include "cachescope/trace_model.hpp"

namespace cachescope {

enum class Tier { TG, ARA };

enum class Category {
  HitMiss,
  MissRate,
  PolicyComparison,
  Count,
  Arithmetic,
  Trick,
  MicroarchConcepts,
  CodeGeneration,
  PolicyAnalysis,
  WorkloadAnalysis,
  SemanticAnalysis,
};

std::string_view to_string(Tier tier);
std::string_view to_string(Category category);
std::optional<Tier> parse_tier(std::string_view name);
std::optional<Category> parse_category(std::string_view name);
Tier tier_of(Category category);
/// All categories, TG first, in reporting order.
const std::vector<Category>& all_categories();

struct LabelExpected {
  std::vector<std::string> accepted;  // correct labels
  std::vector<std::string> choices;   // every label the question offers
};

struct NumericExpected {
  double value = 0;
  double tolerance = 0;
  std::string unit;  // "%" for rates, "" for counts
};

struct TrickExpected {
  std::string premise;                      // what is false about the question
  std::vector<std::string> reject_patterns;  // empty: the default list
};

struct RubricExpected {
  std::string reference;
  std::vector<std::string> criteria;
};

using Expected = std::variant<LabelExpected, NumericExpected, TrickExpected, RubricExpected>;

struct Grounding {
  std::optional<TraceKey> trace;
  QueryFilters filters;
};

struct BenchQuestion {
  std::string id;
  Tier tier = Tier::TG;
  Category category = Category::HitMiss;
  std::string text;
  Expected expected;
  Grounding grounding;
};

struct QuestionSuite {
  std::vector<BenchQuestion> questions;
  std::vector<std::string> warnings;
  std::map<Category, std::size_t> counts() const;
};

/// Throws SchemaError naming the offending line (position = line number).
QuestionSuite parse_questions(std::istream& in, std::string_view source = "<stream>");
QuestionSuite load_questions(const std::filesystem::path& path);
std::string question_to_json(const BenchQuestion& q);
void write_questions(const std::vector<BenchQuestion>& questions, std::ostream& out);

const std::vector<std::string>& default_reject_patterns();

/// Lowercase, non-alphanumerics to single spaces, padded with one space.
std::string normalize_text(std::string_view text);

/// First number not inside a 0x token; with prefer_percent, the first one
/// followed by '%' wins when there is one.
std::optional<double> extract_number(std::string_view answer, bool prefer_percent);

/// 0 or 1. Throws SchemaError for a rubric expectation.
int score_tg(std::string_view answer, const Expected& expected);

struct JudgeResult {
  int score = 0;
  std::string transcript;
};

class Judge {
 public:
  virtual ~Judge() = default;
  /// Throws Error(JudgeError).
  virtual JudgeResult judge(const BenchQuestion& question, std::string_view answer) = 0;
};

/// Human-assigned scores from JSONL lines {"id": ..., "score": 0..5}.
class ScoreFileJudge final : public Judge {
 public:
  explicit ScoreFileJudge(std::map<std::string, int> scores);
  static ScoreFileJudge load(const std::filesystem::path& path);
  JudgeResult judge(const BenchQuestion& question, std::string_view answer) override;

 private:
  std::map<std::string, int> scores_;
};

/// Prompts a model with the rubric and reference answer.
class ModelJudge final : public Judge {
 public:
  explicit ModelJudge(ModelClient& client) : client_(client) {}
  JudgeResult judge(const BenchQuestion& question, std::string_view answer) override;

 private:
  ModelClient& client_;
};

/// Reads "Score: N" (0..5). Throws Error(JudgeError).
int parse_judge_score(std::string_view text);

int score_ara(std::string_view answer, const BenchQuestion& question, Judge& judge,
              std::string* transcript = nullptr);

struct PipelineConfig {
  RetrieverChoice retriever = RetrieverChoice::Sieve;
  ModelClient* answer_client = nullptr;   // required
  ModelClient* program_client = nullptr;  // ranger/auto; defaults to answer_client
  Judge* judge = nullptr;                 // ARA questions stay unscored without one
  int shots = 0;
  std::size_t max_retries = 3;
  std::size_t excerpt_cap = 32;
  std::size_t jobs = 1;
};

struct QuestionResult {
  std::string id;
  Tier tier = Tier::TG;
  Category category = Category::HitMiss;
  std::string answer;
  std::optional<int> score;  // absent: unscored
  int max_score = 1;
  std::string retriever_used;
  std::size_t attempts = 0;
  std::string provenance;
  std::string error;
};

struct CategoryScore {
  Category category = Category::HitMiss;
  std::size_t count = 0;
  std::size_t unscored = 0;
  double accuracy_pct = 0;
};

struct BenchReport {
  std::vector<QuestionResult> results;
  std::vector<CategoryScore> categories;  // categories present, reporting order
  double tg_total = 0;
  double ara_total = 0;
};

/// sum(acc_i * n_i) / sum(n_i); 0 when there are no questions.
double weighted_total(const std::vector<std::pair<double, std::size_t>>& per_category);

/// Per-question failures are recorded in the result and the run continues.
BenchReport run_bench(const TraceStore& store, const PipelineConfig& config,
                      const std::vector<BenchQuestion>& questions);

/// Builds the per-category table and totals from scored results.
BenchReport summarize_results(std::vector<QuestionResult> results);

std::string report_to_json(const BenchReport& report);
std::string report_to_csv(const BenchReport& report);
std::string report_to_text(const BenchReport& report);

}  // namespace cachescope
