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

#include "crowdctl/common/json.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::workflow {

// Workflow file format (schemaVersion 1). Unknown keys anywhere in the
// document are a parse error.
WorkflowDef workflow_from_json(const Json& j);
WorkflowDef parse_workflow(std::string_view text);
Json to_json(const WorkflowDef& def);
std::string serialize_workflow(const WorkflowDef& def);

// Gives Do blocks without a group membership in the auto-created default
// group when the workflow declares no groups at all.
void ensure_default_group(WorkflowDef& def);

Json to_json(const TaskTemplate& t);
TaskTemplate template_from_json(const Json& j, const std::string& path);
Json to_json(const TransformSpec& t);
TransformSpec transform_from_json(const Json& j, const std::string& path);
Json to_json(const ExperimentGroup& g);

Json to_json(const FieldValue& v);
FieldValue field_value_from_json(const Json& j, const std::string& path);
Json to_json(const DataUnit& u);
DataUnit unit_from_json(const Json& j, const std::string& path = "unit");
std::vector<DataUnit> units_from_json(const Json& j);
Json to_json(const std::vector<DataUnit>& units);

}  // namespace crowdctl::workflow
