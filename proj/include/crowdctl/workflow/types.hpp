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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/scheduler/schedule.hpp"
#include "crowdctl/workers/policy.hpp"

namespace crowdctl::workflow {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kDefaultGroup = "default";

enum class UiKind {
  text,
  image,
  text_input,
  single_choice,
  multi_choice,
  highlightable_text,
  highlightable_image,
};

std::string_view to_string(UiKind k);
UiKind ui_kind_from_string(std::string_view s);
bool is_choice(UiKind k);

struct UiElement {
  UiKind kind = UiKind::text;
  // Exactly one of field/literal is set: `field` binds to a unit payload
  // field, `literal` is fixed text (e.g. the question).
  std::optional<std::string> field;
  std::optional<std::string> literal;
  std::vector<std::string> options;
  bool required = false;

  bool operator==(const UiElement&) const = default;
};

struct Paging {
  int units_per_page = 3;
  int gold_per_page = 1;
  bool first_page_all_gold = true;
  int max_pages = 6;

  bool operator==(const Paging&) const = default;
};

struct TaskTemplate {
  std::string title;
  std::string instructions;
  std::vector<UiElement> elements;
  Paging paging;

  // First single/multi choice element; its options are the legal answers.
  const UiElement* answer_element() const;

  bool operator==(const TaskTemplate&) const = default;
};

enum class TransformOp { filter, map_field, partition, sample, aggregate_majority, concat };

std::string_view to_string(TransformOp op);
std::optional<TransformOp> transform_op_from_string(std::string_view s);

struct TransformSpec {
  // Registered ops beyond the built-in set are carried by name.
  std::string op;
  Json params = Json::object();

  bool operator==(const TransformSpec&) const = default;
};

struct DoBlock {
  TaskTemplate task;
  std::string platform = "sim";
  std::int64_t reward_minor = 0;
  int votes_per_unit = 1;
  std::string group;

  bool operator==(const DoBlock&) const = default;
};

struct LambdaBlock {
  TransformSpec transform;

  bool operator==(const LambdaBlock&) const = default;
};

enum class BlockKind { do_task, lambda };

struct BlockDef {
  std::string id;
  std::variant<DoBlock, LambdaBlock> payload;

  BlockKind kind() const {
    return std::holds_alternative<DoBlock>(payload) ? BlockKind::do_task : BlockKind::lambda;
  }
  const DoBlock* as_do() const { return std::get_if<DoBlock>(&payload); }
  const LambdaBlock* as_lambda() const { return std::get_if<LambdaBlock>(&payload); }

  bool operator==(const BlockDef&) const = default;
};

struct Edge {
  std::string from;
  std::string to;

  bool operator==(const Edge&) const = default;
};

// Coarse condition class of a group; drives the crossover cohorts in bias
// reports (support->base, base->support, bad->good).
enum class ConditionKind { unspecified, base, support, bad_support, good_support };

std::string_view to_string(ConditionKind k);
ConditionKind condition_kind_from_string(std::string_view s);
inline bool is_support(ConditionKind k) {
  return k == ConditionKind::support || k == ConditionKind::bad_support ||
         k == ConditionKind::good_support;
}

struct ExperimentGroup {
  std::string id;
  std::string label;
  std::string color_hint;
  ConditionKind kind = ConditionKind::unspecified;

  bool operator==(const ExperimentGroup&) const = default;
};

struct Position {
  double x = 0;
  double y = 0;
  bool operator==(const Position&) const = default;
};

struct WorkflowDef {
  std::string id;
  std::string name;
  int version = 1;
  std::vector<BlockDef> blocks;
  std::vector<Edge> edges;
  std::vector<ExperimentGroup> groups;
  workers::EligibilityPolicy policy;
  std::optional<scheduler::Schedule> schedule;
  std::optional<workers::QuotaConfig> quotas;
  std::map<std::string, Position> display;

  const BlockDef* find_block(std::string_view id) const;
  const ExperimentGroup* find_group(std::string_view id) const;
  // Parents of `block` in edge-declaration order.
  std::vector<std::string> parents_of(std::string_view block) const;

  bool operator==(const WorkflowDef&) const = default;
};

using FieldValue = std::variant<std::string, std::int64_t, double, bool>;

struct Gold {
  std::string expected_answer;
  std::string explanation;
  bool operator==(const Gold&) const = default;
};

struct DataUnit {
  std::string id;
  std::map<std::string, FieldValue> payload;
  std::optional<Gold> gold;

  bool operator==(const DataUnit&) const = default;
};

std::string field_to_string(const FieldValue& v);

}  // namespace crowdctl::workflow
