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

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "crowdctl/workflow/types.hpp"

namespace crowdctl::workflow {

struct Factor {
  std::string name;
  std::vector<std::string> levels;
};

struct FactorialDesign {
  std::vector<Factor> factors;
};

// Settings copied onto every generated Do block.
struct DoDefaults {
  std::string platform = "sim";
  std::int64_t reward_minor = 0;
  int votes_per_unit = 1;
};

struct FactorialExpansion {
  std::vector<BlockDef> blocks;  // one Do block per level tuple
  std::vector<ExperimentGroup> groups;
};

// Expands the Cartesian product of factor levels (first factor varies
// slowest). `group_pattern` uses {factor} placeholders, e.g.
// "{dataset}/{size}/{condition}"; empty means "name=level" pairs joined by
// '/'. Group ids must come out distinct, so the pattern has to mention
// every factor with more than one level.
FactorialExpansion expand_factorial(const FactorialDesign& design, const TaskTemplate& task,
                                    std::string_view group_pattern = {},
                                    const DoDefaults& defaults = {});

}  // namespace crowdctl::workflow
