/*
 * Copyright 2026 The crowdctl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "crowdctl/workflow/factorial.hpp"

#include <set>

#include "crowdctl/common/error.hpp"

namespace crowdctl::workflow {
namespace {

std::string render(std::string_view pattern, const FactorialDesign& design,
                   const std::vector<std::size_t>& idx) {
  if (pattern.empty()) {
    std::string out;
    for (std::size_t f = 0; f < design.factors.size(); ++f) {
      if (f) out += '/';
      out += design.factors[f].name + "=" + design.factors[f].levels[idx[f]];
    }
    return out;
  }
  std::string out(pattern);
  for (std::size_t f = 0; f < design.factors.size(); ++f) {
    const std::string key = "{" + design.factors[f].name + "}";
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos)) {
      out.replace(pos, key.size(), design.factors[f].levels[idx[f]]);
      pos += design.factors[f].levels[idx[f]].size();
    }
  }
  return out;
}

}  // namespace

FactorialExpansion expand_factorial(const FactorialDesign& design, const TaskTemplate& task,
                                    std::string_view group_pattern, const DoDefaults& defaults) {
  if (design.factors.empty()) throw Error(errc::no_factors, "no factors");
  for (const auto& f : design.factors) {
    if (f.levels.empty()) {
      throw Error(errc::invalid_argument, "factor '" + f.name + "' has no levels");
    }
  }

  FactorialExpansion out;
  std::set<std::string> seen;
  std::vector<std::size_t> idx(design.factors.size(), 0);
  while (true) {
    std::string group = render(group_pattern, design, idx);
    if (!seen.insert(group).second) {
      throw Error(errc::invalid_argument,
                  "group pattern maps two level tuples onto group '" + group + "'");
    }
    std::string label;
    for (std::size_t f = 0; f < design.factors.size(); ++f) {
      if (f) label += ", ";
      label += design.factors[f].name + ": " + design.factors[f].levels[idx[f]];
    }
    DoBlock d;
    d.task = task;
    d.platform = defaults.platform;
    d.reward_minor = defaults.reward_minor;
    d.votes_per_unit = defaults.votes_per_unit;
    d.group = group;
    out.blocks.push_back(BlockDef{"do:" + group, std::move(d)});
    out.groups.push_back(ExperimentGroup{group, label, "", ConditionKind::unspecified});

    // Odometer increment, last factor fastest.
    std::size_t f = design.factors.size();
    while (f > 0) {
      --f;
      if (++idx[f] < design.factors[f].levels.size()) break;
      idx[f] = 0;
      if (f == 0) return out;
    }
  }
}

}  // namespace crowdctl::workflow
