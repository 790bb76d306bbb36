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

#include "crowdctl/workflow/types.hpp"

#include <array>
#include <cstdio>

#include "crowdctl/common/error.hpp"

namespace crowdctl::workflow {
namespace {

constexpr std::array<std::pair<UiKind, std::string_view>, 7> kUiKinds = {{
    {UiKind::text, "text"},
    {UiKind::image, "image"},
    {UiKind::text_input, "text-input"},
    {UiKind::single_choice, "single-choice"},
    {UiKind::multi_choice, "multi-choice"},
    {UiKind::highlightable_text, "highlightable-text"},
    {UiKind::highlightable_image, "highlightable-image"},
}};

constexpr std::array<std::pair<TransformOp, std::string_view>, 6> kOps = {{
    {TransformOp::filter, "filter"},
    {TransformOp::map_field, "map-field"},
    {TransformOp::partition, "partition"},
    {TransformOp::sample, "sample"},
    {TransformOp::aggregate_majority, "aggregate-majority"},
    {TransformOp::concat, "concat"},
}};

constexpr std::array<std::pair<ConditionKind, std::string_view>, 5> kConditionKinds = {{
    {ConditionKind::unspecified, "unspecified"},
    {ConditionKind::base, "base"},
    {ConditionKind::support, "support"},
    {ConditionKind::bad_support, "bad-support"},
    {ConditionKind::good_support, "good-support"},
}};

}  // namespace

std::string_view to_string(UiKind k) {
  for (const auto& [kind, name] : kUiKinds) {
    if (kind == k) return name;
  }
  return "?";
}

UiKind ui_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kUiKinds) {
    if (name == s) return kind;
  }
  throw Error(errc::parse_error, "unknown UI element kind '" + std::string(s) + "'");
}

bool is_choice(UiKind k) { return k == UiKind::single_choice || k == UiKind::multi_choice; }

const UiElement* TaskTemplate::answer_element() const {
  for (const auto& e : elements) {
    if (is_choice(e.kind)) return &e;
  }
  return nullptr;
}

std::string_view to_string(TransformOp op) {
  for (const auto& [o, name] : kOps) {
    if (o == op) return name;
  }
  return "?";
}

std::optional<TransformOp> transform_op_from_string(std::string_view s) {
  for (const auto& [o, name] : kOps) {
    if (name == s) return o;
  }
  return std::nullopt;
}

std::string_view to_string(ConditionKind k) {
  for (const auto& [kind, name] : kConditionKinds) {
    if (kind == k) return name;
  }
  return "?";
}

ConditionKind condition_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kConditionKinds) {
    if (name == s) return kind;
  }
  throw Error(errc::parse_error, "unknown condition kind '" + std::string(s) + "'");
}

const BlockDef* WorkflowDef::find_block(std::string_view block_id) const {
  for (const auto& b : blocks) {
    if (b.id == block_id) return &b;
  }
  return nullptr;
}

const ExperimentGroup* WorkflowDef::find_group(std::string_view group_id) const {
  for (const auto& g : groups) {
    if (g.id == group_id) return &g;
  }
  return nullptr;
}

std::vector<std::string> WorkflowDef::parents_of(std::string_view block) const {
  std::vector<std::string> out;
  for (const auto& e : edges) {
    if (e.to == block) out.push_back(e.from);
  }
  return out;
}

std::string field_to_string(const FieldValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.17g", x);
          return buf;
        } else {
          return std::to_string(x);
        }
      },
      v);
}

}  // namespace crowdctl::workflow
