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
#include <vector>

#include "crowdctl/analysis/bias.hpp"
#include "crowdctl/platform/judgment.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::orchestrator {

// Workflow version a run was started from, read straight from the store.
// Throws not-found for an unknown run and definition-unavailable when the
// version is gone.
workflow::WorkflowDef run_definition(store::Store& store, const std::string& run_id);

std::vector<platform::Judgment> run_judgments(store::Store& store, const std::string& run_id);

// Fills run id, group kinds and scheduler window counts into `base`.
analysis::ReportConfig report_config_for_run(store::Store& store, const std::string& run_id,
                                             analysis::ReportConfig base = {});

// Bias report over a stored run. Throws invalid-argument when the run has
// no judgments yet.
analysis::BiasReport run_report(store::Store& store, const std::string& run_id,
                                analysis::ReportConfig base = {});

}  // namespace crowdctl::orchestrator
