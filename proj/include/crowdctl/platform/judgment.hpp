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

#include <optional>
#include <string>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"

namespace crowdctl::platform {

// One worker's answer to one unit. Adapters that only know raw platform
// data (the file adapter) leave canonical_worker_id empty; the engine
// attributes such judgments through the worker manager at ingest.
struct Judgment {
  std::string unit_id;
  std::string canonical_worker_id;
  std::string platform_worker_id;
  std::string fingerprint;
  std::string block_id;
  std::string group_id;
  std::string answer;
  double decision_time_s = 0.0;
  Timestamp submitted_at;
  bool is_gold = false;
  std::optional<bool> gold_correct;  // present iff is_gold
  bool trusted = true;
  // Whether the worker's participation complied with the run's policy. In
  // observe mode (eligibility off) this is the shadow verdict.
  bool compliant = true;
  bool valid = true;  // trusted && compliant
  std::string country;

  bool operator==(const Judgment&) const = default;
};

Json to_json(const Judgment& j);
Judgment judgment_from_json(const Json& j);

}  // namespace crowdctl::platform
