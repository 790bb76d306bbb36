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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/violation.hpp"

namespace crowdctl::workers {

enum class Design { between_subjects, within_subjects };
enum class Recurrence { block_all_repeats, allow_same_condition, allow_all };
enum class CrossoverRule { block, allow };

struct EligibilityPolicy {
  Design design = Design::between_subjects;
  Recurrence recurrence = Recurrence::block_all_repeats;
  CrossoverRule crossover = CrossoverRule::block;
  std::string message_on_block =
      "Thanks for your interest. You already took part in this study, so this task is not "
      "available to you.";
  // Gold-based trust: a worker is trusted until `trust_warmup` gold answers
  // are in, then while accuracy stays at or above `trust_threshold`.
  double trust_threshold = 0.7;
  int trust_warmup = 3;

  bool operator==(const EligibilityPolicy&) const = default;
};

enum class QuotaEnforcement { hard_block, soft_rotate };

struct CountryBucket {
  std::string head;
  std::set<std::string> members;

  bool operator==(const CountryBucket&) const = default;
};

struct QuotaConfig {
  std::vector<CountryBucket> buckets;
  double max_share = 1.0;
  QuotaEnforcement enforcement = QuotaEnforcement::hard_block;
  // Countries in no bucket form an implicit "rest" bucket, uncapped unless set.
  std::optional<double> rest_cap;

  bool operator==(const QuotaConfig&) const = default;
};

inline constexpr std::string_view kRestBucket = "rest";

std::string_view to_string(Design d);
std::string_view to_string(Recurrence r);
std::string_view to_string(CrossoverRule c);
std::string_view to_string(QuotaEnforcement e);

Json to_json(const EligibilityPolicy& p);
EligibilityPolicy policy_from_json(const Json& j, const std::string& path = "policy");
Json to_json(const QuotaConfig& q);
QuotaConfig quotas_from_json(const Json& j, const std::string& path = "quotas");

Violations validate_policy(const EligibilityPolicy& p);
Violations validate_quotas(const QuotaConfig& q);

}  // namespace crowdctl::workers
