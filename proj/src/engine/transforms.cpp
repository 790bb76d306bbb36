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

#include "crowdctl/engine/transforms.hpp"

#include <algorithm>
#include <cstdint>
#include <random>

#include "crowdctl/common/error.hpp"

namespace crowdctl::engine {
namespace {

const Json* field_of(const Json& el, const std::string& name) {
  if (!el.is_object()) return nullptr;
  if (auto p = el.find("payload"); p != el.end() && p->is_object()) {
    if (auto f = p->find(name); f != p->end()) return &*f;
  }
  if (auto f = el.find(name); f != el.end()) return &*f;
  return nullptr;
}

void require_array(const Json& input, std::string_view op) {
  if (!input.is_array()) {
    throw Error(errc::invalid_argument, std::string(op) + " expects a list input");
  }
}

// A field referenced by a transform must exist on at least one element.
void require_field(const Json& input, const std::string& field, std::string_view op) {
  if (input.empty()) return;
  for (const auto& el : input) {
    if (field_of(el, field)) return;
  }
  throw Error(errc::invalid_argument,
              std::string(op) + ": unknown field '" + field + "'");
}

std::string key_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::string param_string(const Json& params, const char* key, std::string_view op) {
  if (!params.contains(key) || !params[key].is_string()) {
    throw Error(errc::invalid_argument,
                std::string(op) + " requires string parameter '" + key + "'");
  }
  return params[key].get<std::string>();
}

}  // namespace

Json filter_op(const Json& params, const Json& input) {
  require_array(input, "filter");
  const std::string field = param_string(params, "field", "filter");
  if (!params.contains("value")) throw Error(errc::invalid_argument, "filter requires 'value'");
  require_field(input, field, "filter");
  const Json& want = params["value"];
  Json out = Json::array();
  for (const auto& el : input) {
    const Json* v = field_of(el, field);
    if (v && *v == want) out.push_back(el);
  }
  return out;
}

Json map_field_op(const Json& params, const Json& input) {
  require_array(input, "map-field");
  const std::string from = param_string(params, "from", "map-field");
  const std::string to = param_string(params, "to", "map-field");
  Json out = Json::array();
  for (const auto& el : input) {
    const Json* v = field_of(el, from);
    if (!v) throw Error(errc::invalid_argument, "map-field: unknown field '" + from + "'");
    Json copy = el;
    if (copy.contains("payload") && copy["payload"].is_object()) {
      copy["payload"][to] = *v;
    } else {
      copy[to] = *v;
    }
    out.push_back(std::move(copy));
  }
  return out;
}

Json partition_op(const Json& params, const Json& input) {
  require_array(input, "partition");
  const std::string field = param_string(params, "field", "partition");
  require_field(input, field, "partition");
  std::map<std::string, Json> parts;
  for (const auto& el : input) {
    const Json* v = field_of(el, field);
    if (!v) continue;
    auto [it, fresh] = parts.try_emplace(key_text(*v), Json::array());
    it->second.push_back(el);
  }
  if (params.contains("key")) {
    const std::string key = key_text(params["key"]);
    auto it = parts.find(key);
    return it == parts.end() ? Json::array() : it->second;
  }
  Json out = Json::array();
  for (auto& [key, items] : parts) out.push_back(Json{{"key", key}, {"items", std::move(items)}});
  return out;
}

Json sample_op(const Json& params, const Json& input) {
  require_array(input, "sample");
  if (!params.contains("n") || !params["n"].is_number_integer() || params["n"].get<std::int64_t>() < 0) {
    throw Error(errc::invalid_argument, "sample requires a non-negative integer 'n'");
  }
  if (!params.contains("seed") || !params["seed"].is_number_integer()) {
    throw Error(errc::invalid_argument, "sample requires an integer 'seed'");
  }
  const auto n = static_cast<std::size_t>(params["n"].get<std::int64_t>());
  if (n >= input.size()) return input;
  std::vector<std::size_t> idx(input.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Fisher-Yates driven directly by the engine so the result does not depend
  // on the standard library's distribution implementation.
  std::mt19937_64 rng(params["seed"].get<std::uint64_t>());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  Json out = Json::array();
  for (auto i : idx) out.push_back(input[i]);
  return out;
}

Json aggregate_majority_op(const Json& params, const Json& input) {
  require_array(input, "aggregate-majority");
  const std::string field =
      params.contains("field") ? param_string(params, "field", "aggregate-majority") : "answer";
  const bool valid_only = params.value("validOnly", true);
  require_field(input, field, "aggregate-majority");

  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::int64_t>> tallies;
  for (const auto& el : input) {
    if (valid_only && el.is_object() && el.value("valid", true) == false) continue;
    const Json* v = field_of(el, field);
    if (!v) continue;
    const Json* unit = field_of(el, "unitId");
    const std::string unit_id = unit ? key_text(*unit) : "";
    if (!tallies.contains(unit_id)) order.push_back(unit_id);
    ++tallies[unit_id][key_text(*v)];
  }
  Json out = Json::array();
  for (const auto& unit_id : order) {
    const auto& t = tallies[unit_id];
    std::int64_t best = 0;
    std::int64_t total = 0;
    for (const auto& [label, n] : t) {
      best = std::max(best, n);
      total += n;
    }
    std::string winner;
    int at_best = 0;
    for (const auto& [label, n] : t) {  // map order: lexicographic
      if (n == best) {
        if (at_best++ == 0) winner = label;
      }
    }
    out.push_back(Json{{"unitId", unit_id},
                       {"answer", winner},
                       {"votes", best},
                       {"total", total},
                       {"tie", at_best > 1}});
  }
  return out;
}

Json concat_op(const Json&, const Json& input) {
  require_array(input, "concat");
  return input;
}

TransformRegistry::TransformRegistry() {
  ops_["filter"] = filter_op;
  ops_["map-field"] = map_field_op;
  ops_["partition"] = partition_op;
  ops_["sample"] = sample_op;
  ops_["aggregate-majority"] = aggregate_majority_op;
  ops_["concat"] = concat_op;
}

void TransformRegistry::add(const std::string& op, TransformFn fn) {
  std::lock_guard lock(mu_);
  if (workflow::transform_op_from_string(op)) {
    throw Error(errc::conflict, "transform op '" + op + "' is built in");
  }
  ops_[op] = std::move(fn);
}

bool TransformRegistry::contains(const std::string& op) const {
  std::lock_guard lock(mu_);
  return ops_.contains(op);
}

std::set<std::string> TransformRegistry::extra_ops() const {
  std::lock_guard lock(mu_);
  std::set<std::string> out;
  for (const auto& [name, fn] : ops_) {
    if (!workflow::transform_op_from_string(name)) out.insert(name);
  }
  return out;
}

Json TransformRegistry::eval(const workflow::TransformSpec& spec, const Json& input) const {
  TransformFn fn;
  {
    std::lock_guard lock(mu_);
    auto it = ops_.find(spec.op);
    if (it == ops_.end()) throw Error(errc::invalid_argument, "unknown transform op '" + spec.op + "'");
    fn = it->second;
  }
  return fn(spec.params, input);
}

}  // namespace crowdctl::engine
