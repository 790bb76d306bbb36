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

#include "crowdctl/platform/judgment.hpp"

#include <cmath>

namespace crowdctl::platform {

Json to_json(const Judgment& j) {
  Json out{{"unitId", j.unit_id},
           {"workerId", j.canonical_worker_id},
           {"platformWorkerId", j.platform_worker_id},
           {"fingerprint", j.fingerprint},
           {"blockId", j.block_id},
           {"groupId", j.group_id},
           {"answer", j.answer},
           {"decisionTimeMs", std::llround(j.decision_time_s * 1000.0)},
           {"submittedAt", format_utc(j.submitted_at)},
           {"isGold", j.is_gold},
           {"trusted", j.trusted},
           {"compliant", j.compliant},
           {"valid", j.valid},
           {"country", j.country}};
  if (j.gold_correct) out["goldCorrect"] = *j.gold_correct;
  return out;
}

Judgment judgment_from_json(const Json& j) {
  ObjectReader r(j, "judgment");
  Judgment out;
  out.unit_id = r.required<std::string>("unitId");
  out.canonical_worker_id = r.value_or<std::string>("workerId", "");
  out.platform_worker_id = r.value_or<std::string>("platformWorkerId", "");
  out.fingerprint = r.value_or<std::string>("fingerprint", "");
  out.block_id = r.value_or<std::string>("blockId", "");
  out.group_id = r.value_or<std::string>("groupId", "");
  out.answer = r.required<std::string>("answer");
  out.decision_time_s = static_cast<double>(r.value_or<std::int64_t>("decisionTimeMs", 0)) / 1000.0;
  out.submitted_at = parse_utc(r.required<std::string>("submittedAt"));
  out.is_gold = r.value_or<bool>("isGold", false);
  out.gold_correct = r.optional<bool>("goldCorrect");
  out.trusted = r.value_or<bool>("trusted", true);
  out.compliant = r.value_or<bool>("compliant", true);
  out.valid = r.value_or<bool>("valid", true);
  out.country = r.value_or<std::string>("country", "");
  r.finish();
  if (out.is_gold != out.gold_correct.has_value()) {
    throw Error(errc::parse_error, "goldCorrect must be present iff isGold");
  }
  return out;
}

}  // namespace crowdctl::platform
