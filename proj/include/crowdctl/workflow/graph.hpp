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

#include <set>
#include <string>
#include <vector>

#include "crowdctl/common/violation.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::workflow {

struct ValidationResult {
  Violations violations;
  bool ok() const { return violations.empty(); }
};

// Collects every violation in `def`; never stops at the first. Bindings are
// resolved against `unit_schema` plus fields produced by map-field
// transforms inside the workflow. `extra_ops` names transform ops
// registered beyond the built-in set.
ValidationResult validate_workflow(const WorkflowDef& def, const std::set<std::string>& unit_schema,
                                   const std::set<std::string>& extra_ops = {});

// Checks a unit set against a validated workflow: non-empty payloads, unique
// ids, and gold answers that are legal options of every Do block's answer
// element.
Violations validate_units(const WorkflowDef& def, const std::vector<DataUnit>& units);

std::set<std::string> unit_schema_of(const std::vector<DataUnit>& units);

// Kahn's algorithm with the ready set ordered by block id, so the order is
// a pure function of the graph. Throws Error(cycle) on a cyclic graph.
std::vector<std::string> topological_order(const WorkflowDef& def);

// Block ids that sit on a cycle (left over after Kahn's algorithm), sorted.
std::vector<std::string> cyclic_blocks(const WorkflowDef& def);

}  // namespace crowdctl::workflow
