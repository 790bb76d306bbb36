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

#include "crowdctl/platform/population.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::orchestrator {

struct Workload {
  workflow::WorkflowDef def;
  std::vector<workflow::DataUnit> units;
};

// Paged relevance-highlighting task: title and abstract, a highlightable
// abstract, and an in/out choice. Three units per page, the first page all
// gold.
workflow::TaskTemplate highlight_template();

// Between-subjects highlighting study: six conditions (baseline, 0% / 33%
// wrong highlights, 66% / 100% correct highlights, aggregated highlights),
// each run over short, medium and long abstracts. 3 size partitions feed
// 18 Do blocks; per-size majority votes across conditions; a final concat.
// `plain_per_size` non-gold units and `gold_per_size` gold units per size.
Workload highlight_study(int plain_per_size = 29, int gold_per_size = 8, int votes_per_unit = 5);

// 10-block workflow for crash testing: 2 partitions, 4 Do blocks in two
// groups, 2 fan-in majority votes, a concat and a final filter.
Workload crash_workload(int plain_per_size = 6, int gold_per_size = 4, int votes_per_unit = 3);

// Two countries twelve hours apart with day-only activity; `heavy` arrives
// `ratio` times as often as `light`.
platform::PopulationProfile two_country_profile(double heavy_per_hour = 3.0, double ratio = 3.0);

}  // namespace crowdctl::orchestrator
