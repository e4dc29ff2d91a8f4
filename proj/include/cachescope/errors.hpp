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
#include <stdexcept>
#include <string>
#include <string_view>

namespace cachescope {

enum class ErrorCode {
  InvalidKey,
  IoError,
  FormatError,
  ConfigError,
  EmptyTrace,
  ParseError,
  SchemaError,
  PcNotFound,
  WorkloadNotFound,
  NotEnoughSets,
  NoMisses,
  BundleNotFound,
  AmbiguousBundle,
  EmptyResult,
  ExhaustedRetries,
  ClientError,
  JudgeError,
  SessionNotFound,
  RunNotFound,
};

std::string_view to_string(ErrorCode code);

/// Every module reports failures through this one exception type. The code
/// is stable and is what the CLI and HTTP layers map to exit codes/statuses.
/// `position` is a line number, byte offset or character index depending on
/// the producer; the message says which.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(message), code_(code), position_(position) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

}  // namespace cachescope
