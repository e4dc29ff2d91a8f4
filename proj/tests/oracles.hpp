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

// Brute-force reference implementations used only by tests. None of these
// share code paths with the library.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <list>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cachescope/simulator.hpp"

namespace oracle {

using cachescope::Access;
using cachescope::Address;

inline std::uint32_t set_of(Address a, std::uint32_t sets, std::uint32_t line) {
  std::uint32_t shift = 0;
  while ((1u << shift) < line) ++shift;
  return static_cast<std::uint32_t>((a >> shift) % sets);
}

/// Per-set recency lists; front is most recent.
inline std::vector<bool> naive_lru_hits(const std::vector<Access>& trace, std::uint32_t sets,
                                        std::uint32_t ways, std::uint32_t line = 64) {
  std::vector<std::list<Address>> lists(sets);
  std::vector<bool> hits;
  for (const auto& a : trace) {
    auto& l = lists[set_of(a.address, sets, line)];
    auto it = std::find(l.begin(), l.end(), a.address);
    if (it != l.end()) {
      l.erase(it);
      l.push_front(a.address);
      hits.push_back(true);
    } else {
      l.push_front(a.address);
      if (l.size() > ways) l.pop_back();
      hits.push_back(false);
    }
  }
  return hits;
}

/// Maximum hits over every sequence of victim choices (insertion forced).
inline std::size_t exhaustive_max_hits(const std::vector<Access>& trace, std::uint32_t sets,
                                       std::uint32_t ways, std::uint32_t line = 64) {
  struct Rec {
    const std::vector<Access>& t;
    std::uint32_t sets, ways, line;
    std::size_t go(std::size_t i, std::vector<std::vector<Address>> state) const {
      if (i == t.size()) return 0;
      auto& s = state[set_of(t[i].address, sets, line)];
      if (std::find(s.begin(), s.end(), t[i].address) != s.end()) return 1 + go(i + 1, state);
      if (s.size() < ways) {
        s.push_back(t[i].address);
        return go(i + 1, state);
      }
      std::size_t best = 0;
      for (std::size_t v = 0; v < s.size(); ++v) {
        auto next = state;
        next[set_of(t[i].address, sets, line)][v] = t[i].address;
        best = std::max(best, go(i + 1, next));
      }
      return best;
    }
  };
  return Rec{trace, sets, ways, line}.go(0, std::vector<std::vector<Address>>(sets));
}

inline std::vector<std::optional<std::uint64_t>> rescan_forward(const std::vector<Address>& a) {
  std::vector<std::optional<std::uint64_t>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if (a[j] == a[i]) {
        out[i] = j - i;
        break;
      }
  return out;
}

/// Intervening accesses since the previous touch.
inline std::vector<std::optional<std::uint64_t>> rescan_recency(const std::vector<Address>& a) {
  std::vector<std::optional<std::uint64_t>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i; j-- > 0;)
      if (a[j] == a[i]) {
        out[i] = i - j - 1;
        break;
      }
  return out;
}

/// Addresses drawn from a small alphabet of line addresses.
inline std::vector<Access> random_trace(std::mt19937_64& rng, std::size_t length,
                                        std::size_t alphabet) {
  std::vector<Access> t;
  for (std::size_t i = 0; i < length; ++i) {
    const auto sym = rng() % alphabet;
    t.push_back({0x400000 + (rng() % 3) * 4, 0x2a9e6a40000 + sym * 64});
  }
  return t;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() /
           ("cachescope_" + tag + "_" + std::to_string(rng() % 1000000000));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
