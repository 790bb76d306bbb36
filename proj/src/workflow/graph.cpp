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

#include "crowdctl/workflow/graph.hpp"

#include <map>
#include <queue>

#include "crowdctl/common/error.hpp"

namespace crowdctl::workflow {
namespace {

struct KahnResult {
  std::vector<std::string> order;
  std::vector<std::string> leftover;
};

KahnResult kahn(const WorkflowDef& def) {
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& b : def.blocks) indegree.emplace(b.id, 0);
  for (const auto& e : def.edges) {
    if (!indegree.contains(e.from) || !indegree.contains(e.to)) continue;
    out[e.from].push_back(e.to);
    ++indegree[e.to];
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.push(id);
  }
  KahnResult r;
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    for (const auto& next : out[id]) {
      if (--indegree[next] == 0) ready.push(next);
    }
    r.order.push_back(std::move(id));
  }
  for (const auto& [id, d] : indegree) {
    if (d > 0) r.leftover.push_back(id);
  }
  return r;
}

std::string join(const std::vector<std::string>& xs, std::string_view sep) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    s += xs[i];
  }
  return s;
}

bool has(const Json& params, const char* key) { return params.is_object() && params.contains(key); }

void check_transform(const BlockDef& b, const TransformSpec& t,
                     const std::set<std::string>& extra_ops, Violations& out) {
  auto op = transform_op_from_string(t.op);
  if (!op) {
    if (!extra_ops.contains(t.op)) {
      out.push_back({"unknown-transform", "unknown transform op '" + t.op + "'", b.id});
    }
    return;
  }
  auto missing = [&](const char* key) {
    out.push_back({"transform-params",
                   "transform " + t.op + " requires parameter '" + key + "'", b.id});
  };
  switch (*op) {
    case TransformOp::filter:
      if (!has(t.params, "field")) missing("field");
      if (!has(t.params, "value")) missing("value");
      break;
    case TransformOp::map_field:
      if (!has(t.params, "from")) missing("from");
      if (!has(t.params, "to")) missing("to");
      break;
    case TransformOp::partition:
      if (!has(t.params, "field")) missing("field");
      break;
    case TransformOp::sample:
      if (!has(t.params, "n")) missing("n");
      if (!has(t.params, "seed")) missing("seed");
      break;
    case TransformOp::aggregate_majority:
    case TransformOp::concat:
      break;
  }
}

}  // namespace

std::vector<std::string> topological_order(const WorkflowDef& def) {
  auto r = kahn(def);
  if (!r.leftover.empty()) throw Error(errc::cycle, "cycle: " + join(r.leftover, ","));
  return r.order;
}

std::vector<std::string> cyclic_blocks(const WorkflowDef& def) { return kahn(def).leftover; }

ValidationResult validate_workflow(const WorkflowDef& def, const std::set<std::string>& unit_schema,
                                   const std::set<std::string>& extra_ops) {
  ValidationResult res;
  auto& out = res.violations;

  if (def.name.empty()) out.push_back({"name", "workflow name is empty", ""});
  if (def.version < 1) out.push_back({"version", "workflow version must be >= 1", ""});
  if (def.blocks.empty()) out.push_back({"empty", "workflow has no blocks", ""});

  std::set<std::string> block_ids;
  for (const auto& b : def.blocks) {
    if (b.id.empty()) out.push_back({"block-id", "block id is empty", ""});
    if (!block_ids.insert(b.id).second) {
      out.push_back({"duplicate-block", "duplicate block id " + b.id, b.id});
    }
  }
  std::set<std::string> group_ids;
  for (const auto& g : def.groups) {
    if (!group_ids.insert(g.id).second) {
      out.push_back({"duplicate-group", "duplicate group id " + g.id, g.id});
    }
  }

  for (const auto& e : def.edges) {
    for (const auto* end : {&e.from, &e.to}) {
      if (!block_ids.contains(*end)) {
        out.push_back({"unknown-endpoint", "edge endpoint " + *end + " does not exist", *end});
      }
    }
  }
  if (auto cyc = cyclic_blocks(def); !cyc.empty()) {
    out.push_back({"cycle", "cycle: " + join(cyc, ","), cyc.front()});
  }

  // Fields available to bindings: the unit schema plus anything a map-field
  // transform writes, plus the partition tag.
  std::set<std::string> schema = unit_schema;
  schema.insert("id");
  schema.insert("_partition");
  for (const auto& b : def.blocks) {
    if (const auto* l = b.as_lambda(); l && l->transform.op == "map-field" &&
                                       has(l->transform.params, "to") &&
                                       l->transform.params["to"].is_string()) {
      schema.insert(l->transform.params["to"].get<std::string>());
    }
  }

  for (const auto& b : def.blocks) {
    if (const auto* d = b.as_do()) {
      if (d->votes_per_unit < 1) {
        out.push_back({"votes", "votes-per-unit must be >= 1", b.id});
      }
      if (d->reward_minor < 0) out.push_back({"reward", "reward must be >= 0", b.id});
      if (d->group.empty()) {
        out.push_back({"do-without-group", "Do block belongs to no experiment group", b.id});
      } else if (!group_ids.contains(d->group)) {
        out.push_back({"unknown-group", "Do block references unknown group " + d->group, b.id});
      }
      const auto& p = d->task.paging;
      if (p.units_per_page < 1) out.push_back({"paging", "units-per-page must be >= 1", b.id});
      if (p.gold_per_page < 0 || p.gold_per_page > p.units_per_page) {
        out.push_back({"paging", "gold-per-page must be in [0, units-per-page]", b.id});
      }
      if (p.max_pages < 1) out.push_back({"paging", "max-pages must be >= 1", b.id});
      if (d->task.elements.empty()) {
        out.push_back({"template", "task template has no UI elements", b.id});
      }
      for (const auto& e : d->task.elements) {
        if (is_choice(e.kind) && e.options.size() < 2) {
          out.push_back({"choice-options",
                         std::string(to_string(e.kind)) + " element needs >= 2 options", b.id});
        }
        if (e.field && !schema.contains(*e.field)) {
          out.push_back({"unresolved-binding", "unresolved binding '" + *e.field + "'", b.id});
        }
      }
    } else {
      check_transform(b, b.as_lambda()->transform, extra_ops, out);
    }
  }

  for (const auto& v : workers::validate_policy(def.policy)) out.push_back(v);
  if (def.schedule) {
    for (const auto& v : scheduler::validate_schedule(*def.schedule)) out.push_back(v);
  }
  if (def.quotas) {
    for (const auto& v : workers::validate_quotas(*def.quotas)) out.push_back(v);
  }
  for (const auto& [id, _] : def.display) {
    if (!block_ids.contains(id)) {
      out.push_back({"display", "display hint for unknown block " + id, id});
    }
  }
  return res;
}

std::set<std::string> unit_schema_of(const std::vector<DataUnit>& units) {
  std::set<std::string> schema;
  for (const auto& u : units) {
    for (const auto& [k, _] : u.payload) schema.insert(k);
  }
  return schema;
}

Violations validate_units(const WorkflowDef& def, const std::vector<DataUnit>& units) {
  Violations out;
  std::set<std::string> ids;
  for (const auto& u : units) {
    if (!ids.insert(u.id).second) out.push_back({"duplicate-unit", "duplicate unit id", u.id});
    if (u.payload.empty()) out.push_back({"empty-payload", "unit payload is empty", u.id});
    if (!u.gold) continue;
    for (const auto& b : def.blocks) {
      const auto* d = b.as_do();
      if (!d) continue;
      const UiElement* answer = d->task.answer_element();
      if (!answer) continue;
      bool legal = false;
      for (const auto& o : answer->options) legal = legal || o == u.gold->expected_answer;
      if (!legal) {
        out.push_back({"illegal-gold",
                       "gold answer '" + u.gold->expected_answer + "' is not an option of " + b.id,
                       u.id});
      }
    }
  }
  return out;
}

}  // namespace crowdctl::workflow
