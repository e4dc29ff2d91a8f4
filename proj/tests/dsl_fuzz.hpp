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

// Random QueryProgram ASTs for fuzzing the evaluator. Programs are drawn
// from the whole AST space, so many are invalid on purpose.

#include <random>
#include <string>
#include <vector>

#include "cachescope/ranger_dsl.hpp"

namespace fuzz {

using namespace cachescope::dsl;

class ProgramGen {
 public:
  ProgramGen(std::uint64_t seed, std::vector<std::pair<std::string, std::string>> traces)
      : rng_(seed), traces_(std::move(traces)) {
    traces_.emplace_back("nosuch", "lru");
  }

  QueryProgram next() {
    QueryProgram p;
    const auto& t = traces_[pick(traces_.size())];
    p.source.workload = t.first;
    p.source.policy = t.second;
    p.source.metadata = chance(0.2);
    const auto stages = pick(6);
    for (std::size_t i = 0; i < stages; ++i) p.stages.push_back(stage(p.source.metadata));
    p.emit = emit();
    return p;
  }

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

  std::string column() {
    const auto& cols = columns();
    if (chance(0.05)) return "not_a_column";
    return std::string(cols[pick(cols.size())].name);
  }

  Literal literal() {
    switch (pick(6)) {
      case 0: return {Value{std::uint64_t{0x400000 + pick(0x10000)}}, true};
      case 1: return {Value{std::uint64_t{pick(5000)}}, false};
      case 2: return {Value{static_cast<double>(pick(10000)) / 4.0 + 0.25}, false};
      case 3: {
        static const char* kStrings[] = {"Cache Miss", "Cache Hit", "Capacity", "walk_list", "a \"quoted\" \\ str"};
        return {Value{std::string(kStrings[pick(5)])}, false};
      }
      case 4: return {Value{std::monostate{}}, false};
      default: return {Value{-static_cast<double>(pick(100)) - 0.5}, false};
    }
  }

  Stage stage(bool metadata) {
    switch (pick(metadata ? 7 : 6)) {
      case 0: {
        Filter f;
        f.column = column();
        f.in = chance(0.2);
        f.op = f.in ? Op::Eq : static_cast<Op>(pick(6));  // op is unused with `in`
        const auto n = f.in ? 1 + pick(3) : 1;
        for (std::size_t i = 0; i < n; ++i) f.values.push_back(literal());
        return f;
      }
      case 1: return GroupBy{column()};
      case 2: {
        Aggregate a;
        a.fn = static_cast<AggFn>(pick(7));
        if (a.fn != AggFn::Count || chance(0.5)) a.column = column();
        return a;
      }
      case 3: {
        Sort s;
        s.key = static_cast<Sort::Key>(pick(3));
        if (s.key == Sort::Key::Column) s.column = column();
        if (s.key == Sort::Key::Aggregate) s.aggregate = pick(3);
        s.descending = chance(0.5);
        return s;
      }
      case 4: return Limit{pick(20)};
      default: {
        static const std::vector<std::string> kPatterns{
            "([0-9.]+)% miss rate", "([0-9]+) total accesses", "(x)(y)", "([", "no group",
            std::string(kMaxPatternLength + 5, 'a'), "(.+)", "((a|b)*)*c"};
        return Extract{kPatterns[pick(kPatterns.size())]};
      }
    }
  }

  std::string emit() {
    static const char* kTemplates[] = {"{0}", "{key}: {0}", "{program_counter} {evict}", "{metadata}",
                                       "{{literal}} {trace}", "{1}", "{description}", "{nope}",
                                       "rows {0} and {1}", "plain text", "{"};
    return kTemplates[pick(std::size(kTemplates))];
  }

  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, std::string>> traces_;
};

}  // namespace fuzz
