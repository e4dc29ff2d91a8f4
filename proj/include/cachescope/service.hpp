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

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "cachescope/bench.hpp"
#include "cachescope/generator.hpp"
#include "cachescope/model_client.hpp"
#include "cachescope/stats.hpp"
#include "cachescope/trace_model.hpp"

namespace cachescope {

struct ServiceConfig {
  RetrieverChoice retriever = RetrieverChoice::Auto;  // per-session default
  int shots = 0;
  std::size_t max_retries = kDefaultMaxRetries;
  std::size_t excerpt_cap = kDefaultExcerptCap;
  MemoryConfig memory;
  std::chrono::seconds idle_timeout{1800};
};

struct ServiceClients {
  ModelClient* answer = nullptr;   // required
  ModelClient* program = nullptr;  // defaults to `answer`
  Judge* judge = nullptr;
};

/// HTTP status for an error code: 400 bad request, 404 missing key, PC or
/// session, 502 model failures, 500 otherwise.
int http_status(ErrorCode code);
std::string error_json(const Error& error);

std::string pc_stats_json(const PcStats& stats);
std::string set_hotness_json(const SetHotness& hotness);

/// JSON API over a read-only store. Sessions live in memory only.
class Service {
 public:
  Service(const TraceStore& store, ServiceClients clients, ServiceConfig config = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds (port 0 picks a free one), serves on a background thread and
  /// returns the bound port. Throws Error(IoError) when binding fails.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cachescope
