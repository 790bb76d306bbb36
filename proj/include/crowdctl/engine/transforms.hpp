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

#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>

#include "crowdctl/common/json.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::engine {

// Lambda inputs and outputs are JSON arrays of data units
// ({id, payload, gold?}) or judgments ({unitId, answer, ...}). Field names
// resolve against a unit's payload first, then the element's own keys.
using TransformFn = std::function<Json(const Json& params, const Json& input)>;

// Closed vocabulary of Lambda transforms, extensible by name.
class TransformRegistry {
 public:
  TransformRegistry();  // the built-in ops

  void add(const std::string& op, TransformFn fn);
  bool contains(const std::string& op) const;
  std::set<std::string> extra_ops() const;  // registered beyond the built-ins

  // Deterministic for a given spec and input. Throws invalid-argument for an
  // unknown op or a field no element carries.
  Json eval(const workflow::TransformSpec& spec, const Json& input) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, TransformFn> ops_;
};

// Built-in ops, exposed for direct use and tests.
Json filter_op(const Json& params, const Json& input);       // {field, value}
Json map_field_op(const Json& params, const Json& input);    // {from, to}
Json partition_op(const Json& params, const Json& input);    // {field, key?}
Json sample_op(const Json& params, const Json& input);       // {n, seed}
Json aggregate_majority_op(const Json& params, const Json& input);  // {field?, validOnly?}
Json concat_op(const Json& params, const Json& input);

}  // namespace crowdctl::engine
