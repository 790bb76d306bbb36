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

#include "crowdctl/orchestrator/reporting.hpp"

#include <algorithm>

#include "crowdctl/common/error.hpp"
#include "crowdctl/scheduler/schedule.hpp"
#include "crowdctl/workflow/codec.hpp"

namespace crowdctl::orchestrator {

workflow::WorkflowDef run_definition(store::Store& store, const std::string& run_id) {
  const auto run = store.get_run(run_id);
  if (!run) throw Error(errc::not_found, "unknown run " + run_id);
  const auto body = store.get_workflow(run->workflow_id, run->workflow_version);
  if (!body) {
    throw Error(errc::definition_unavailable,
                "workflow " + run->workflow_id + " version " +
                    std::to_string(run->workflow_version) + " is not in the store");
  }
  return workflow::workflow_from_json(*body);
}

std::vector<platform::Judgment> run_judgments(store::Store& store, const std::string& run_id) {
  if (!store.get_run(run_id)) throw Error(errc::not_found, "unknown run " + run_id);
  std::vector<platform::Judgment> out;
  for (const auto& sj : store.judgments(run_id)) out.push_back(platform::judgment_from_json(sj.body));
  return out;
}

analysis::ReportConfig report_config_for_run(store::Store& store, const std::string& run_id,
                                             analysis::ReportConfig base) {
  const auto def = run_definition(store, run_id);
  base.run_id = run_id;
  for (const auto& g : def.groups) base.group_kinds[g.id] = g.kind;
  if (auto saved = store.get("scheduler", run_id)) {
    const auto state = scheduler::scheduler_state_from_json(Json::parse(saved->value));
    const bool any = std::any_of(state.window_counts.begin(), state.window_counts.end(),
                                 [](const auto& m) { return !m.empty(); });
    if (any) base.window_counts = state.window_counts;
  }
  return base;
}

analysis::BiasReport run_report(store::Store& store, const std::string& run_id,
                                analysis::ReportConfig base) {
  const auto log = run_judgments(store, run_id);
  if (log.empty()) throw Error(errc::invalid_argument, "run " + run_id + " has no judgments yet");
  return analysis::build_report(log, report_config_for_run(store, run_id, std::move(base)));
}

}  // namespace crowdctl::orchestrator
