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

#include "crowdctl/workflow/codec.hpp"

namespace crowdctl::workflow {
namespace {

const Json& require_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(errc::parse_error, "expected array at " + path);
  return j;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

UiElement element_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  UiElement e;
  e.kind = ui_kind_from_string(r.required<std::string>("kind"));
  e.field = r.optional<std::string>("field");
  e.literal = r.optional<std::string>("literal");
  e.options = r.value_or<std::vector<std::string>>("options", {});
  e.required = r.value_or<bool>("required", false);
  r.finish();
  if (e.field.has_value() == e.literal.has_value()) {
    throw Error(errc::parse_error, "exactly one of field/literal required at " + path);
  }
  return e;
}

Json to_json(const UiElement& e) {
  Json j{{"kind", to_string(e.kind)}, {"required", e.required}};
  if (e.field) j["field"] = *e.field;
  if (e.literal) j["literal"] = *e.literal;
  if (!e.options.empty()) j["options"] = e.options;
  return j;
}

BlockDef block_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  BlockDef b;
  b.id = r.required<std::string>("id");
  const auto kind = r.required<std::string>("kind");
  if (kind == "do") {
    DoBlock d;
    d.task = template_from_json(r.required_json("task"), r.path_of("task"));
    d.platform = r.value_or<std::string>("platform", "sim");
    d.reward_minor = r.value_or<std::int64_t>("reward", 0);
    d.votes_per_unit = r.value_or<int>("votesPerUnit", 1);
    d.group = r.value_or<std::string>("group", "");
    b.payload = std::move(d);
  } else if (kind == "lambda") {
    LambdaBlock l;
    l.transform = transform_from_json(r.required_json("transform"), r.path_of("transform"));
    b.payload = std::move(l);
  } else {
    throw Error(errc::parse_error, "block kind must be do or lambda at " + path);
  }
  r.finish();
  return b;
}

Json to_json(const BlockDef& b) {
  Json j{{"id", b.id}};
  if (const auto* d = b.as_do()) {
    j["kind"] = "do";
    j["task"] = to_json(d->task);
    j["platform"] = d->platform;
    j["reward"] = d->reward_minor;
    j["votesPerUnit"] = d->votes_per_unit;
    j["group"] = d->group;
  } else {
    j["kind"] = "lambda";
    j["transform"] = to_json(b.as_lambda()->transform);
  }
  return j;
}

}  // namespace

Json to_json(const TaskTemplate& t) {
  Json elements = Json::array();
  for (const auto& e : t.elements) elements.push_back(to_json(e));
  return Json{{"title", t.title},
              {"instructions", t.instructions},
              {"elements", elements},
              {"paging",
               {{"unitsPerPage", t.paging.units_per_page},
                {"goldPerPage", t.paging.gold_per_page},
                {"firstPageAllGold", t.paging.first_page_all_gold},
                {"maxPages", t.paging.max_pages}}}};
}

TaskTemplate template_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  TaskTemplate t;
  t.title = r.required<std::string>("title");
  t.instructions = r.value_or<std::string>("instructions", "");
  const Json& elements = require_array(r.required_json("elements"), r.path_of("elements"));
  for (std::size_t i = 0; i < elements.size(); ++i) {
    t.elements.push_back(element_from_json(elements[i], at(r.path_of("elements"), i)));
  }
  if (const Json* p = r.optional_json("paging")) {
    ObjectReader pr(*p, r.path_of("paging"));
    t.paging.units_per_page = pr.value_or<int>("unitsPerPage", t.paging.units_per_page);
    t.paging.gold_per_page = pr.value_or<int>("goldPerPage", t.paging.gold_per_page);
    t.paging.first_page_all_gold =
        pr.value_or<bool>("firstPageAllGold", t.paging.first_page_all_gold);
    t.paging.max_pages = pr.value_or<int>("maxPages", t.paging.max_pages);
    pr.finish();
  }
  r.finish();
  return t;
}

Json to_json(const TransformSpec& t) { return Json{{"op", t.op}, {"params", t.params}}; }

TransformSpec transform_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  TransformSpec t;
  t.op = r.required<std::string>("op");
  if (const Json* p = r.optional_json("params")) {
    if (!p->is_object()) throw Error(errc::parse_error, "params must be an object at " + path);
    t.params = *p;
  }
  r.finish();
  return t;
}

Json to_json(const ExperimentGroup& g) {
  Json j{{"id", g.id}, {"label", g.label}};
  if (!g.color_hint.empty()) j["color"] = g.color_hint;
  if (g.kind != ConditionKind::unspecified) j["kind"] = to_string(g.kind);
  return j;
}

void ensure_default_group(WorkflowDef& def) {
  if (!def.groups.empty()) return;
  bool needed = false;
  for (auto& b : def.blocks) {
    if (auto* d = std::get_if<DoBlock>(&b.payload); d && d->group.empty()) {
      d->group = std::string(kDefaultGroup);
      needed = true;
    }
  }
  if (needed) def.groups.push_back({std::string(kDefaultGroup), "Default", "", {}});
}

WorkflowDef workflow_from_json(const Json& j) {
  ObjectReader r(j, "workflow");
  const int schema = r.required<int>("schemaVersion");
  if (schema != kSchemaVersion) {
    throw Error(errc::parse_error, "unsupported schemaVersion " + std::to_string(schema));
  }
  WorkflowDef def;
  def.id = r.value_or<std::string>("id", "");
  def.version = r.value_or<int>("version", 1);
  def.name = r.required<std::string>("name");

  const Json& blocks = require_array(r.required_json("blocks"), "workflow.blocks");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    def.blocks.push_back(block_from_json(blocks[i], at("workflow.blocks", i)));
  }
  const Json edges_json = r.value_or<Json>("edges", Json::array());
  const Json& edges = require_array(edges_json, "workflow.edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    ObjectReader er(edges[i], at("workflow.edges", i));
    def.edges.push_back({er.required<std::string>("from"), er.required<std::string>("to")});
    er.finish();
  }
  const Json groups_json = r.value_or<Json>("groups", Json::array());
  const Json& groups = require_array(groups_json, "workflow.groups");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ObjectReader gr(groups[i], at("workflow.groups", i));
    ExperimentGroup g;
    g.id = gr.required<std::string>("id");
    g.label = gr.value_or<std::string>("label", g.id);
    g.color_hint = gr.value_or<std::string>("color", "");
    g.kind = condition_kind_from_string(gr.value_or<std::string>("kind", "unspecified"));
    gr.finish();
    def.groups.push_back(std::move(g));
  }
  if (const Json* pol = r.optional_json("policy")) {
    def.policy = workers::policy_from_json(*pol, "workflow.policy");
  }
  if (const Json* s = r.optional_json("schedule")) {
    def.schedule = scheduler::schedule_from_json(*s, "workflow.schedule");
  }
  if (const Json* q = r.optional_json("quotas")) {
    def.quotas = workers::quotas_from_json(*q, "workflow.quotas");
  }
  if (const Json* d = r.optional_json("display")) {
    if (!d->is_object()) throw Error(errc::parse_error, "expected object at workflow.display");
    for (auto it = d->begin(); it != d->end(); ++it) {
      ObjectReader pr(it.value(), "workflow.display." + it.key());
      def.display[it.key()] = {pr.required<double>("x"), pr.required<double>("y")};
      pr.finish();
    }
  }
  r.finish();
  ensure_default_group(def);
  return def;
}

WorkflowDef parse_workflow(std::string_view text) {
  return workflow_from_json(parse_json(text, "workflow"));
}

Json to_json(const WorkflowDef& def) {
  Json blocks = Json::array();
  for (const auto& b : def.blocks) blocks.push_back(to_json(b));
  Json edges = Json::array();
  for (const auto& e : def.edges) edges.push_back(Json{{"from", e.from}, {"to", e.to}});
  Json groups = Json::array();
  for (const auto& g : def.groups) groups.push_back(to_json(g));
  Json j{{"schemaVersion", kSchemaVersion},
         {"name", def.name},
         {"version", def.version},
         {"blocks", blocks},
         {"edges", edges},
         {"groups", groups},
         {"policy", workers::to_json(def.policy)}};
  if (!def.id.empty()) j["id"] = def.id;
  if (def.schedule) j["schedule"] = scheduler::to_json(*def.schedule);
  if (def.quotas) j["quotas"] = workers::to_json(*def.quotas);
  if (!def.display.empty()) {
    Json d = Json::object();
    for (const auto& [id, p] : def.display) d[id] = Json{{"x", p.x}, {"y", p.y}};
    j["display"] = d;
  }
  return j;
}

std::string serialize_workflow(const WorkflowDef& def) { return to_json(def).dump(2); }

Json to_json(const FieldValue& v) {
  return std::visit([](const auto& x) { return Json(x); }, v);
}

FieldValue field_value_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  throw Error(errc::parse_error, "payload values must be scalars at " + path);
}

Json to_json(const DataUnit& u) {
  Json payload = Json::object();
  for (const auto& [k, v] : u.payload) payload[k] = to_json(v);
  Json j{{"id", u.id}, {"payload", payload}};
  if (u.gold) {
    j["gold"] = Json{{"answer", u.gold->expected_answer}, {"explanation", u.gold->explanation}};
  }
  return j;
}

DataUnit unit_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  DataUnit u;
  u.id = r.required<std::string>("id");
  const Json& payload = r.required_json("payload");
  if (!payload.is_object()) throw Error(errc::parse_error, "payload must be an object at " + path);
  for (auto it = payload.begin(); it != payload.end(); ++it) {
    u.payload[it.key()] = field_value_from_json(it.value(), path + ".payload." + it.key());
  }
  if (const Json* g = r.optional_json("gold")) {
    ObjectReader gr(*g, path + ".gold");
    u.gold = Gold{gr.required<std::string>("answer"), gr.value_or<std::string>("explanation", "")};
    gr.finish();
  }
  r.finish();
  return u;
}

std::vector<DataUnit> units_from_json(const Json& j) {
  const Json& arr = require_array(j, "units");
  std::vector<DataUnit> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(unit_from_json(arr[i], at("units", i)));
  return out;
}

Json to_json(const std::vector<DataUnit>& units) {
  Json arr = Json::array();
  for (const auto& u : units) arr.push_back(to_json(u));
  return arr;
}

}  // namespace crowdctl::workflow
