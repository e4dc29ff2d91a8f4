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

#include "cachescope/errors.hpp"

namespace cachescope {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidKey: return "InvalidKey";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::PcNotFound: return "PcNotFound";
    case ErrorCode::WorkloadNotFound: return "WorkloadNotFound";
    case ErrorCode::NotEnoughSets: return "NotEnoughSets";
    case ErrorCode::NoMisses: return "NoMisses";
    case ErrorCode::BundleNotFound: return "BundleNotFound";
    case ErrorCode::AmbiguousBundle: return "AmbiguousBundle";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::ExhaustedRetries: return "ExhaustedRetries";
    case ErrorCode::ClientError: return "ClientError";
    case ErrorCode::JudgeError: return "JudgeError";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    case ErrorCode::RunNotFound: return "RunNotFound";
  }
  return "Unknown";
}

}  // namespace cachescope
