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

#include "cachescope/model_client.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include "httplib.h"
#include "json.hpp"

#include "cachescope/errors.hpp"
#include "cachescope/sieve.hpp"

namespace cachescope {

using nlohmann::json;

ScriptedClient::ScriptedClient(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

std::vector<std::string> ScriptedClient::read_responses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
  std::vector<std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      if (j.is_string()) out.push_back(j.get<std::string>());
      else out.push_back(j.at("response").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", path.string(), n, e.what()), n);
    }
  }
  return out;
}

std::string ScriptedClient::chat(const std::vector<ChatMessage>& messages) {
  std::lock_guard lock(mu_);
  received_.push_back(messages);
  if (next_ >= responses_.size())
    throw Error(ErrorCode::ClientError, "scripted client has no responses left");
  return responses_[next_++];
}

std::vector<std::vector<ChatMessage>> ScriptedClient::received() const {
  std::lock_guard lock(mu_);
  return received_;
}

std::size_t ScriptedClient::remaining() const {
  std::lock_guard lock(mu_);
  return responses_.size() - next_;
}

std::size_t token_overlap(std::string_view a, std::string_view b) {
  const auto ta = tokenize(a), tb = tokenize(b);
  const std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
  std::size_t n = 0;
  for (const auto& t : sa) n += sb.count(t);
  return n;
}

namespace {

/// Body of the `## <title>` section, up to the next `## ` heading.
std::string section(std::string_view text, std::string_view title) {
  const std::string heading = fmt::format("## {}\n", title);
  auto at = text.find(heading);
  if (at == std::string_view::npos) return {};
  at += heading.size();
  auto end = text.find("\n## ", at);
  if (end == std::string_view::npos) end = text.size();
  return std::string(text.substr(at, end - at));
}

}  // namespace

namespace {

// Provenance and description lines say where the evidence came from, not
// what it found.
bool is_context_header(std::string_view line) {
  for (std::string_view h : {"Trace:", "Filters:", "Query program:", "Workload:", "Replacement Policy:"})
    if (line.starts_with(h)) return true;
  return false;
}

}  // namespace

std::string GroundedEchoClient::chat(const std::vector<ChatMessage>& messages) {
  const ChatMessage* last = nullptr;
  for (const auto& m : messages)
    if (m.role == "user") last = &m;
  if (!last) throw Error(ErrorCode::ClientError, "no user message to answer");
  const auto evidence = section(last->content, "Evidence");
  const auto question = section(last->content, "Question");
  std::string best, result;
  std::size_t best_score = 0;
  std::size_t start = 0;
  while (start < evidence.size()) {
    auto end = evidence.find('\n', start);
    if (end == std::string::npos) end = evidence.size();
    auto line = evidence.substr(start, end - start);
    start = end + 1;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    line = line.substr(first);
    if (is_context_header(line)) continue;
    if (result.empty() && line.starts_with("Result:")) result = line;
    const auto score = token_overlap(line, question);
    if (score > best_score) {
      best_score = score;
      best = line;
    }
  }
  if (best.empty()) best = result;
  if (best.empty()) return "The evidence does not contain an answer to this question.";
  return best;
}

HttpClientConfig HttpClientConfig::from_env() {
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  HttpClientConfig c;
  c.base_url = env("CACHESCOPE_BASE_URL");
  c.model = env("CACHESCOPE_MODEL");
  c.api_key = env("CACHESCOPE_API_KEY");
  c.embed_model = env("CACHESCOPE_EMBED_MODEL");
  return c;
}

HttpChatClient::HttpChatClient(HttpClientConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty() || config_.model.empty())
    throw Error(ErrorCode::ConfigError, "the HTTP model client needs a base URL and a model id");
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::ConfigError, fmt::format("base URL '{}' has no scheme", config_.base_url));
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  origin_ = config_.base_url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (origin_.starts_with("https://"))
    throw Error(ErrorCode::ConfigError, "this build has no TLS support; use an http:// base URL");
#endif
}

std::string HttpChatClient::chat_request_body(const std::string& model,
                                              const std::vector<ChatMessage>& messages) {
  json body;
  body["model"] = model;
  body["messages"] = json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  body["temperature"] = 0;
  return body.dump();
}

std::string HttpChatClient::parse_chat_response(std::string_view body) {
  try {
    auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ClientError, fmt::format("unexpected chat response: {}", e.what()));
  }
}

std::string HttpChatClient::post(const std::string& path, const std::string& body) {
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  auto res = client.Post(prefix_ + path, headers, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::ClientError,
                fmt::format("request to {}{} failed: {}", origin_, prefix_ + path, httplib::to_string(res.error())));
  }
  if (res->status / 100 != 2) {
    throw Error(ErrorCode::ClientError,
                fmt::format("model endpoint returned HTTP {}: {}", res->status, res->body.substr(0, 300)));
  }
  return res->body;
}

std::string HttpChatClient::chat(const std::vector<ChatMessage>& messages) {
  return parse_chat_response(post("/chat/completions", chat_request_body(config_.model, messages)));
}

std::optional<std::vector<double>> HttpChatClient::embed(std::string_view text) {
  if (config_.embed_model.empty()) return std::nullopt;
  json body{{"model", config_.embed_model}, {"input", std::string(text)}};
  const auto res = post("/embeddings", body.dump());
  try {
    return json::parse(res).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ClientError, fmt::format("unexpected embeddings response: {}", e.what()));
  }
}

}  // namespace cachescope
