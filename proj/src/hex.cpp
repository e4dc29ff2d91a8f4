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

#include "cachescope/hex.hpp"

#include <fmt/format.h>

namespace cachescope {

std::string to_hex(Address value) { return fmt::format("0x{:x}", value); }

std::optional<Address> parse_hex(std::string_view text, bool require_prefix) {
  if (text.size() >= 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
  } else if (require_prefix) {
    return std::nullopt;
  }
  if (text.empty() || text.size() > 16) return std::nullopt;
  Address value = 0;
  for (char c : text) {
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else return std::nullopt;
    value = (value << 4) | static_cast<Address>(digit);
  }
  return value;
}

std::size_t hex_digit_count(std::string_view token) {
  if (token.size() >= 2 && token[0] == '0' && (token[1] == 'x' || token[1] == 'X'))
    token.remove_prefix(2);
  while (token.size() > 1 && token.front() == '0') token.remove_prefix(1);
  return token.size();
}

}  // namespace cachescope
