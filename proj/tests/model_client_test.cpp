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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cachescope/errors.hpp"
#include "cachescope/model_client.hpp"

namespace cachescope {
namespace {

using json = nlohmann::json;

TEST(TokenOverlap, CountsDistinctSharedTokens) {
  EXPECT_EQ(token_overlap("miss rate miss", "the MISS rate"), 2u);
  EXPECT_EQ(token_overlap("", "x"), 0u);
}

TEST(Scripted, RepliesInOrderThenFails) {
  ScriptedClient c({"a", "b"});
  EXPECT_EQ(c.chat({{"user", "1"}}), "a");
  EXPECT_EQ(c.chat({{"user", "2"}}), "b");
  EXPECT_EQ(c.remaining(), 0u);
  EXPECT_THROW(c.chat({{"user", "3"}}), Error);
  const auto got = c.received();
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[1].at(0).content, "2");
}

TEST(Scripted, ReadsResponsesFile) {
  const auto path = std::filesystem::temp_directory_path() / "cachescope_script.jsonl";
  std::ofstream(path) << "\"plain\"\n\n{\"response\": \"wrapped\"}\n";
  EXPECT_EQ(ScriptedClient::read_responses(path), (std::vector<std::string>{"plain", "wrapped"}));
  std::ofstream(path) << "[1]\n";
  EXPECT_THROW(ScriptedClient::read_responses(path), Error);
  std::filesystem::remove(path);
}

TEST(Echo, PicksBestEvidenceLine) {
  GroundedEchoClient echo;
  const std::string body =
      "## Evidence\nTrace: mcf_evictions_lru\nThe miss rate for PC 0x4037ba is 44.69%.\nOther line.\n## Question\nmiss rate "
      "of 0x4037ba?";
  EXPECT_EQ(echo.chat({{"system", "s"}, {"user", body}}), "The miss rate for PC 0x4037ba is 44.69%.");
  EXPECT_EQ(echo.chat({{"user", "## Evidence\nResult: 0x1, 0x2\n## Question\nlist them"}}), "Result: 0x1, 0x2");
  EXPECT_NE(echo.chat({{"user", "## Evidence\nnothing\n## Question\nzzz"}}).find("does not contain"), std::string::npos);
  EXPECT_THROW(echo.chat({{"system", "only"}}), Error);
}

TEST(Http, RequestAndResponseShapes) {
  const auto body = json::parse(HttpChatClient::chat_request_body("m1", {{"system", "s"}, {"user", "u"}}));
  EXPECT_EQ(body["model"], "m1");
  EXPECT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["temperature"], 0);
  EXPECT_EQ(HttpChatClient::parse_chat_response(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})"), "hi");
  EXPECT_THROW(HttpChatClient::parse_chat_response("{}"), Error);
}

TEST(Http, ConfigErrors) {
  EXPECT_THROW(HttpChatClient(HttpClientConfig{}), Error);
  HttpClientConfig c;
  c.base_url = "localhost:8000";
  c.model = "m";
  EXPECT_THROW(HttpChatClient{c}, Error);
}

// A local stand-in for a chat-completions server.
struct FakeEndpoint {
  FakeEndpoint() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth = req.get_header_value("Authorization");
      const auto in = json::parse(req.body);
      if (in["messages"].back()["content"] == "fail") {
        res.status = 500;
        res.set_content("boom", "text/plain");
        return;
      }
      json out{{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + in["messages"].back()["content"].get<std::string>()}}}}}}};
      res.set_content(out.dump(), "application/json");
    });
    server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"data":[{"embedding":[0.5,1.5]}]})", "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeEndpoint() {
    server.stop();
    thread.join();
  }
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::string last_auth;
};

TEST(Http, TalksToEndpoint) {
  FakeEndpoint fake;
  HttpClientConfig c;
  c.base_url = "http://127.0.0.1:" + std::to_string(fake.port) + "/v1/";
  c.model = "m";
  c.api_key = "k";
  HttpChatClient client(c);
  EXPECT_EQ(client.chat({{"user", "hello"}}), "echo: hello");
  EXPECT_EQ(fake.last_auth, "Bearer k");
  EXPECT_FALSE(client.embed("x").has_value());  // no embed model configured
  try {
    client.chat({{"user", "fail"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClientError);
    EXPECT_NE(std::string(e.what()).find("500"), std::string::npos);
  }
  c.embed_model = "e";
  HttpChatClient with_embed(c);
  EXPECT_EQ(with_embed.embed("x"), (std::vector<double>{0.5, 1.5}));
}

TEST(Http, UnreachableIsClientError) {
  HttpClientConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.model = "m";
  c.timeout_seconds = 2;
  HttpChatClient client(c);
  try {
    client.chat({{"user", "x"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClientError);
  }
}

}  // namespace
}  // namespace cachescope
