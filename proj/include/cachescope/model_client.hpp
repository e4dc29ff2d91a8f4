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
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cachescope {

struct ChatMessage {
  std::string role;  // "system", "user", "assistant"
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Chat-model capability. Implementations throw Error(ClientError) on
/// transport or model failures.
class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::string chat(const std::vector<ChatMessage>& messages) = 0;
  /// Fixed-length embedding, or nullopt when the backend has none.
  virtual std::optional<std::vector<double>> embed(std::string_view /*text*/) { return std::nullopt; }
  virtual std::string name() const = 0;
};

/// Replays canned completions in order; throws ClientError once they run out.
class ScriptedClient final : public ModelClient {
 public:
  explicit ScriptedClient(std::vector<std::string> responses);
  /// One completion per line: a JSON string, or an object with "response".
  static std::vector<std::string> read_responses(const std::filesystem::path& path);

  std::string chat(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "scripted"; }

  std::vector<std::vector<ChatMessage>> received() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  std::vector<std::vector<ChatMessage>> received_;
};

/// Answers with the single evidence line sharing the most distinct tokens
/// with the question (first line wins ties), skipping the Trace, Filters,
/// Query program, Workload and Replacement Policy header lines; with no
/// overlap it falls back to the first "Result:" line. Reads the "## Evidence"
/// and "## Question" sections of the last user message. Never adds text of
/// its own beyond that line, so every number it emits is in the evidence.
class GroundedEchoClient final : public ModelClient {
 public:
  std::string chat(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "grounded-echo"; }
};

/// Distinct shared tokens between two texts (tokenised as in the sieve).
std::size_t token_overlap(std::string_view a, std::string_view b);

struct HttpClientConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key;
  std::string embed_model;  // empty: no embeddings
  int timeout_seconds = 60;

  /// CACHESCOPE_BASE_URL, CACHESCOPE_MODEL, CACHESCOPE_API_KEY,
  /// CACHESCOPE_EMBED_MODEL.
  static HttpClientConfig from_env();
};

/// Chat-completions JSON over HTTP(S). See docs/model-wire-format.md.
class HttpChatClient final : public ModelClient {
 public:
  explicit HttpChatClient(HttpClientConfig config);

  std::string chat(const std::vector<ChatMessage>& messages) override;
  std::optional<std::vector<double>> embed(std::string_view text) override;
  std::string name() const override { return "http:" + config_.model; }

  /// Request body for a chat call; exposed for tests.
  static std::string chat_request_body(const std::string& model,
                                       const std::vector<ChatMessage>& messages);
  /// Pulls choices[0].message.content out of a response body.
  static std::string parse_chat_response(std::string_view body);

 private:
  std::string post(const std::string& path, const std::string& body);

  HttpClientConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string prefix_;  // path part of base_url, no trailing slash
};

}  // namespace cachescope
