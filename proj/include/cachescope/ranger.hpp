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
#include <string>
#include <string_view>
#include <vector>

#include "cachescope/errors.hpp"
#include "cachescope/model_client.hpp"
#include "cachescope/ranger_dsl.hpp"
#include "cachescope/trace_model.hpp"

namespace cachescope {

struct RangerAttempt {
  std::string generated;
  ErrorCode code = ErrorCode::ParseError;
  std::string error;
};

struct RangerOutcome {
  std::string result;
  std::optional<dsl::QueryProgram> program;
  std::size_t attempts = 0;
  /// Every failed attempt, in order.
  std::vector<RangerAttempt> transcript;
  /// The last attempt ran but matched nothing; `result` is the not-found text.
  bool not_found = false;
};

class ExhaustedRetries : public Error {
 public:
  ExhaustedRetries(std::string message, std::vector<RangerAttempt> transcript)
      : Error(ErrorCode::ExhaustedRetries, message), transcript_(std::move(transcript)) {}
  const std::vector<RangerAttempt>& transcript() const { return transcript_; }

 private:
  std::vector<RangerAttempt> transcript_;
};

inline constexpr std::size_t kDefaultMaxRetries = 3;

/// Pure function of the store's keys and the record schema.
std::string build_system_prompt(const TraceStore& store);

/// The first fenced code block if there is one, else the whole completion.
std::string extract_program_text(std::string_view completion);

/// generate -> parse -> evaluate, feeding errors back up to `max_retries`
/// times. An empty result is retried too; if the final attempt is still
/// empty the outcome carries the not-found text. Throws ExhaustedRetries.
RangerOutcome ranger_retrieve(std::string_view question, ModelClient& client,
                              const TraceStore& store,
                              std::size_t max_retries = kDefaultMaxRetries);

/// Offline stand-in for a code-writing model: maps templated questions to
/// programs with fixed rules. Unrecognised questions get a metadata dump.
class TemplateProgramClient final : public ModelClient {
 public:
  explicit TemplateProgramClient(const TraceStore& store);
  std::string chat(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "template-program"; }

  std::string program_for(std::string_view question) const;

 private:
  std::vector<std::string> workloads_;
  std::vector<std::string> policies_;
};

}  // namespace cachescope
