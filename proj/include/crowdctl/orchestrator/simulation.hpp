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

#include <chrono>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crowdctl/common/time.hpp"
#include "crowdctl/engine/engine.hpp"
#include "crowdctl/platform/judgment.hpp"
#include "crowdctl/platform/population.hpp"
#include "crowdctl/platform/sim_platform.hpp"
#include "crowdctl/scheduler/schedule.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::orchestrator {

Timestamp default_sim_start();  // Monday 2026-03-02 00:00 UTC

struct SimulationConfig {
  workflow::WorkflowDef def;
  std::vector<workflow::DataUnit> units;
  platform::PopulationProfile profile;
  engine::Toggles toggles;
  std::uint64_t seed = 1;  // seeds both the population and the run
  Timestamp start = default_sim_start();
  std::chrono::hours horizon{24 * 60};
  Millis step{std::chrono::minutes(10)};
  // ":memory:" or a file path. A file store is closed and reopened after
  // every injected crash.
  std::string store_path = ":memory:";
  // Optional caller-owned store used instead of `store_path`. It is never
  // reopened, so injected crashes only rebuild the in-memory objects.
  store::Store* store = nullptr;
  // Fault-boundary visits (1-based, counted over the whole run) at which
  // the process "dies".
  std::set<std::int64_t> crash_at;
  bool keep_trace = false;
};

struct SimulationResult {
  std::string run_id;
  store::RunStatus status = store::RunStatus::created;
  Timestamp finished_at;
  std::vector<platform::Judgment> judgments;  // store order
  std::vector<platform::SimEvent> trace;
  platform::SimStats stats;
  std::map<std::string, std::int64_t> publish_calls;  // Do block -> publish calls
  scheduler::SchedulerState scheduler;
  std::vector<scheduler::Command> commands;  // every command the ticker executed
  std::map<std::string, std::int64_t> group_assignments;
  std::int64_t fault_boundaries = 0;
  std::vector<std::string> crash_points;  // boundary names crashed at
  bool integrity_ok = true;
  std::vector<std::string> integrity_problems;
};

// Runs a workflow against the simulated platform on virtual time until the
// run completes or the horizon passes. Deterministic for a given config.
SimulationResult run_simulation(const SimulationConfig& cfg);

}  // namespace crowdctl::orchestrator
