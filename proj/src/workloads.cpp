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

#include "cachescope/workloads.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "cachescope/errors.hpp"

namespace cachescope::workloads {

namespace {

constexpr Address kLine = 64;

Address line_address(Address base, std::uint64_t index) { return base + index * kLine; }

// Uniform index in [0, bound) from raw engine output.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) { return rng() % bound; }

SymbolInfo symbol(std::string function, Address pc, std::string mnemonic, std::string operands,
                  std::string source) {
  SymbolInfo info;
  info.function_name = std::move(function);
  info.assembly_code = fmt::format(
      "{:x}:\tmov    -0x14(%rbp),%eax\n{:x}:\t{}    {}\n{:x}:\tadd    $0x1,%eax",
      pc - 4, pc, mnemonic, operands, pc + 4);
  info.function_code = std::move(source);
  return info;
}

}  // namespace

SyntheticTrace stream(std::size_t length, std::uint64_t capacity, std::uint64_t seed) {
  constexpr Address kSweepPc = 0x401e31, kHotPc = 0x401e58, kScanPc = 0x401e7c, kIdxPc = 0x401ea2;
  constexpr Address kSweepBase = 0x35e798a0000, kHotBase = 0x35e7c000000, kScanBase = 0x35e7e000000;
  std::mt19937_64 rng(seed);
  SyntheticTrace t;
  t.name = "stream";
  t.description = "stream: streaming array sweep (no reuse) mixed with a small hot lookup "
                  "table and a repeated scan slightly larger than the cache";
  const std::uint64_t hot_lines = std::max<std::uint64_t>(4, capacity / 8);
  const std::uint64_t scan_lines = capacity + capacity / 4;
  std::uint64_t sweep = 0, scan = 0;
  for (std::size_t i = 0; i < length; ++i) {
    switch (i % 5) {
      case 0:
      case 3: t.accesses.push_back({kSweepPc, line_address(kSweepBase, sweep++)}); break;
      case 1: t.accesses.push_back({kHotPc, line_address(kHotBase, draw(rng, hot_lines))}); break;
      case 2: t.accesses.push_back({kScanPc, line_address(kScanBase, scan++ % scan_lines)}); break;
      default: t.accesses.push_back({kIdxPc, line_address(kHotBase, draw(rng, 2))}); break;
    }
  }
  t.symbols[kSweepPc] = symbol("stream_collide", kSweepPc, "movsd ", "(%rdx,%rax,8),%xmm0",
                               "for (i = 0; i < n; ++i) dst[i] = src[i] * omega;");
  t.symbols[kHotPc] = symbol("lookup_weight", kHotPc, "mov   ", "(%rcx,%rdx,4),%esi",
                             "w = weights[cell & mask];");
  t.symbols[kScanPc] = symbol("stream_propagate", kScanPc, "movsd ", "0x8(%rbx,%rax,8),%xmm1",
                              "acc += grid[(base + i) % grid_len];");
  t.symbols[kIdxPc] = symbol("lookup_weight", kIdxPc, "cmp   ", "(%rcx),%esi",
                             "if (flags[0] == mode) ++hits;");
  return t;
}

SyntheticTrace chase(std::size_t length, std::uint64_t capacity, std::uint64_t seed) {
  constexpr Address kChasePc = 0x400512, kLoopPc = 0x400444, kTablePc = 0x400701, kStorePc = 0x400709;
  constexpr Address kNodeBase = 0x2a9e6a40000, kLoopBase = 0x2a9e7000000, kTableBase = 0x2a9e8000000;
  std::mt19937_64 rng(seed);
  SyntheticTrace t;
  t.name = "chase";
  t.description = "chase: pointer chasing over a linked structure twice the cache size, with "
                  "loop-local state and a skewed lookup table";
  const std::uint64_t nodes = 2 * capacity;
  std::vector<std::uint64_t> next(nodes);
  std::iota(next.begin(), next.end(), 0);
  for (std::uint64_t i = nodes - 1; i > 0; --i) std::swap(next[i], next[draw(rng, i + 1)]);
  std::uint64_t node = 0;
  for (std::size_t i = 0; i < length; ++i) {
    switch (i % 4) {
      case 0:
      case 2:
        t.accesses.push_back({kChasePc, line_address(kNodeBase, node)});
        node = next[node];
        break;
      case 1: {
        // Skewed: half the draws hit the first 8 lines.
        const auto idx = (rng() & 1) ? draw(rng, 8) : draw(rng, capacity / 2);
        t.accesses.push_back({kTablePc, line_address(kTableBase, idx)});
        break;
      }
      default:
        t.accesses.push_back({(i % 8 == 3) ? kLoopPc : kStorePc, line_address(kLoopBase, draw(rng, 4))});
        break;
    }
  }
  t.symbols[kChasePc] = symbol("walk_list", kChasePc, "mov   ", "0x8(%rax),%rax",
                               "while (p) { sum += p->val; p = p->next; }");
  t.symbols[kLoopPc] = symbol("walk_list", kLoopPc, "addl  ", "$0x1,-0x4(%rbp)", "++steps;");
  t.symbols[kTablePc] = symbol("classify_node", kTablePc, "movzbl", "(%rdx,%rax,1),%eax",
                               "cls = class_table[key % table_len];");
  t.symbols[kStorePc] = symbol("walk_list", kStorePc, "mov   ", "%eax,-0x8(%rbp)", "last = cls;");
  return t;
}

SyntheticTrace mixed(std::size_t length, std::uint64_t capacity, std::uint64_t seed) {
  constexpr Address kReusePc = 0x409270, kStreamPc = 0x4037aa, kScanPc = 0x402ea8, kAuxPc = 0x409228;
  constexpr Address kReuseBase = 0x2bfd4000000, kStreamBase = 0x31232a00000, kAuxBase = 0x2bfd8000000;
  std::mt19937_64 rng(seed);
  SyntheticTrace t;
  t.name = "mixed";
  t.description = "mixed: a reuse-friendly loop over a working set that fits in the cache, "
                  "interleaved with streaming accesses that are never reused";
  const std::uint64_t working = std::max<std::uint64_t>(2, capacity * 3 / 4);
  std::uint64_t reuse = 0, streamed = 0, scanned = 0;
  for (std::size_t i = 0; i < length; ++i) {
    switch (i % 6) {
      case 0:
      case 2:
      case 4: t.accesses.push_back({kReusePc, line_address(kReuseBase, reuse++ % working)}); break;
      case 1: t.accesses.push_back({kStreamPc, line_address(kStreamBase, streamed++)}); break;
      case 3: t.accesses.push_back({kScanPc, line_address(kStreamBase + 0x10000000, scanned++ % (2 * capacity))}); break;
      default: t.accesses.push_back({kAuxPc, line_address(kAuxBase, draw(rng, 4))}); break;
    }
  }
  t.symbols[kReusePc] = symbol("_ZN7way2obj11createwayarERP6pointtRi", kReusePc, "mov   ",
                               "(%rbx,%rax,8),%rdx", "way[i] = pts[idx[i]];");
  t.symbols[kStreamPc] = symbol("refresh_potential", kStreamPc, "mov   ", "0x30(%r12),%rax",
                                "node->potential = arc->cost + tail->potential;");
  t.symbols[kScanPc] = symbol("price_out_impl", kScanPc, "cmp   ", "0x18(%rdx),%rcx",
                              "if (arc->ident == BASIC) continue;");
  t.symbols[kAuxPc] = symbol("_ZN7way2obj11createwayarERP6pointtRi", kAuxPc, "add   ",
                             "$0x1,%r8d", "++count;");
  return t;
}

SyntheticTrace generate(std::string_view name, std::size_t length, std::uint64_t capacity,
                        std::uint64_t seed) {
  if (name == "stream") return stream(length, capacity, seed);
  if (name == "chase") return chase(length, capacity, seed);
  if (name == "mixed") return mixed(length, capacity, seed);
  throw Error(ErrorCode::ConfigError, fmt::format("unknown synthetic workload '{}'", name));
}

}  // namespace cachescope::workloads
