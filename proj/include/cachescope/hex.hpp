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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cachescope {

using Address = std::uint64_t;

/// Lowercase, `0x`-prefixed rendering used everywhere addresses leave memory.
std::string to_hex(Address value);

/// Parses `0x`-prefixed hex (prefix optional when `require_prefix` is false).
/// Returns nullopt on empty digits, non-hex characters or overflow.
std::optional<Address> parse_hex(std::string_view text, bool require_prefix = true);

/// Number of hex digits after the `0x` prefix, ignoring leading zeros.
std::size_t hex_digit_count(std::string_view token);

}  // namespace cachescope
