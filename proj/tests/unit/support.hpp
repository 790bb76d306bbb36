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

#include "crowdctl/common/time.hpp"
#include "crowdctl/platform/judgment.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::fixture {

inline workflow::TaskTemplate simple_task() {
  workflow::TaskTemplate t;
  t.title = "Screen articles";
  t.instructions = "Decide whether the article is in scope.";
  workflow::UiElement title;
  title.kind = workflow::UiKind::text;
  title.field = "title";
  workflow::UiElement choice;
  choice.kind = workflow::UiKind::single_choice;
  choice.literal = "In scope?";
  choice.options = {"in", "out"};
  choice.required = true;
  t.elements = {title, choice};
  return t;
}

inline workflow::BlockDef do_block(const std::string& id, const std::string& group, int votes = 1) {
  workflow::DoBlock d;
  d.task = simple_task();
  d.group = group;
  d.votes_per_unit = votes;
  return workflow::BlockDef{id, d};
}

inline workflow::BlockDef lambda_block(const std::string& id, const std::string& op,
                                       Json params = Json::object()) {
  return workflow::BlockDef{id, workflow::LambdaBlock{workflow::TransformSpec{op, std::move(params)}}};
}

inline workflow::ExperimentGroup group(const std::string& id,
                                       workflow::ConditionKind kind = workflow::ConditionKind::base) {
  return workflow::ExperimentGroup{id, id, "#888888", kind};
}

// Do "A" -> Lambda "B" (majority vote).
inline workflow::WorkflowDef chain_def() {
  workflow::WorkflowDef def;
  def.id = "chain";
  def.name = "chain";
  def.blocks = {do_block("A", "g1"), lambda_block("B", "aggregate-majority")};
  def.edges = {{"A", "B"}};
  def.groups = {group("g1")};
  return def;
}

inline std::vector<workflow::DataUnit> units(int plain, int gold = 0) {
  std::vector<workflow::DataUnit> out;
  for (int i = 0; i < plain; ++i) {
    out.push_back({"u" + std::to_string(i), {{"title", "Article " + std::to_string(i)}}, std::nullopt});
  }
  for (int i = 0; i < gold; ++i) {
    out.push_back({"g" + std::to_string(i), {{"title", "Gold " + std::to_string(i)}},
                   workflow::Gold{"in", "fixture"}});
  }
  return out;
}

inline Timestamp at_utc(const std::string& text) { return parse_utc(text); }

// Judgment with the fields the analysis reads.
inline platform::Judgment judgment(const std::string& worker, const std::string& block,
                                   const std::string& group, int minute, double seconds = 20.0,
                                   const std::string& country = "VE") {
  platform::Judgment j;
  j.unit_id = "u" + std::to_string(minute);
  j.canonical_worker_id = worker;
  j.platform_worker_id = "p-" + worker;
  j.block_id = block;
  j.group_id = group;
  j.answer = "in";
  j.decision_time_s = seconds;
  j.submitted_at = at_utc("2026-03-02T00:00:00.000Z") + std::chrono::minutes(minute);
  j.country = country;
  return j;
}

}  // namespace crowdctl::fixture
