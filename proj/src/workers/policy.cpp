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

#include "crowdctl/workers/policy.hpp"

#include <map>

namespace crowdctl::workers {
namespace {

template <typename E>
E parse_enum(const std::string& text, const std::map<std::string, E, std::less<>>& table,
             const std::string& path) {
  auto it = table.find(text);
  if (it == table.end()) throw Error(errc::parse_error, "bad value '" + text + "' at " + path);
  return it->second;
}

const std::map<std::string, Design, std::less<>> kDesigns = {
    {"between-subjects", Design::between_subjects},
    {"within-subjects", Design::within_subjects}};
const std::map<std::string, Recurrence, std::less<>> kRecurrence = {
    {"block-all-repeats", Recurrence::block_all_repeats},
    {"allow-same-condition", Recurrence::allow_same_condition},
    {"allow-all", Recurrence::allow_all}};
const std::map<std::string, CrossoverRule, std::less<>> kCrossover = {
    {"block", CrossoverRule::block}, {"allow", CrossoverRule::allow}};
const std::map<std::string, QuotaEnforcement, std::less<>> kEnforcement = {
    {"hard-block", QuotaEnforcement::hard_block},
    {"soft-rotate", QuotaEnforcement::soft_rotate}};

}  // namespace

std::string_view to_string(Design d) {
  return d == Design::between_subjects ? "between-subjects" : "within-subjects";
}

std::string_view to_string(Recurrence r) {
  switch (r) {
    case Recurrence::block_all_repeats: return "block-all-repeats";
    case Recurrence::allow_same_condition: return "allow-same-condition";
    case Recurrence::allow_all: return "allow-all";
  }
  return "?";
}

std::string_view to_string(CrossoverRule c) {
  return c == CrossoverRule::block ? "block" : "allow";
}

std::string_view to_string(QuotaEnforcement e) {
  return e == QuotaEnforcement::hard_block ? "hard-block" : "soft-rotate";
}

Json to_json(const EligibilityPolicy& p) {
  return Json{{"design", to_string(p.design)},
              {"recurrence", to_string(p.recurrence)},
              {"crossover", to_string(p.crossover)},
              {"messageOnBlock", p.message_on_block},
              {"trustThreshold", p.trust_threshold},
              {"trustWarmup", p.trust_warmup}};
}

EligibilityPolicy policy_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  EligibilityPolicy p;
  p.design = parse_enum(r.required<std::string>("design"), kDesigns, r.path_of("design"));
  p.recurrence =
      parse_enum(r.required<std::string>("recurrence"), kRecurrence, r.path_of("recurrence"));
  p.crossover =
      parse_enum(r.required<std::string>("crossover"), kCrossover, r.path_of("crossover"));
  p.message_on_block = r.value_or<std::string>("messageOnBlock", p.message_on_block);
  p.trust_threshold = r.value_or<double>("trustThreshold", p.trust_threshold);
  p.trust_warmup = r.value_or<int>("trustWarmup", p.trust_warmup);
  r.finish();
  return p;
}

Json to_json(const QuotaConfig& q) {
  Json buckets = Json::array();
  for (const auto& b : q.buckets) {
    buckets.push_back(Json{{"head", b.head}, {"members", b.members}});
  }
  Json j{{"buckets", buckets},
         {"maxShare", q.max_share},
         {"enforcement", to_string(q.enforcement)}};
  if (q.rest_cap) j["restCap"] = *q.rest_cap;
  return j;
}

QuotaConfig quotas_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  QuotaConfig q;
  const Json& buckets = r.required_json("buckets");
  if (!buckets.is_array()) throw Error(errc::parse_error, "expected array at " + path + ".buckets");
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    ObjectReader br(buckets[i], path + ".buckets[" + std::to_string(i) + "]");
    CountryBucket b;
    b.head = br.required<std::string>("head");
    b.members = br.value_or<std::set<std::string>>("members", {});
    if (b.members.empty()) b.members.insert(b.head);
    br.finish();
    q.buckets.push_back(std::move(b));
  }
  q.max_share = r.required<double>("maxShare");
  q.enforcement = parse_enum(r.value_or<std::string>("enforcement", "hard-block"), kEnforcement,
                             r.path_of("enforcement"));
  q.rest_cap = r.optional<double>("restCap");
  r.finish();
  return q;
}

Violations validate_policy(const EligibilityPolicy& p) {
  Violations out;
  if (p.design == Design::between_subjects && p.crossover == CrossoverRule::allow) {
    out.push_back({"policy-contradiction",
                   "between-subjects design cannot allow condition crossover", "policy"});
  }
  if (!(p.trust_threshold >= 0.0 && p.trust_threshold <= 1.0)) {
    out.push_back({"policy-trust", "trust threshold must be in [0,1]", "policy"});
  }
  if (p.trust_warmup < 0) {
    out.push_back({"policy-trust", "trust warmup must be non-negative", "policy"});
  }
  return out;
}

Violations validate_quotas(const QuotaConfig& q) {
  Violations out;
  if (!(q.max_share > 0.0 && q.max_share <= 1.0)) {
    out.push_back({"quota-share", "max share must be in (0,1]", "quotas"});
  }
  if (q.rest_cap && !(*q.rest_cap > 0.0 && *q.rest_cap <= 1.0)) {
    out.push_back({"quota-share", "rest cap must be in (0,1]", "quotas"});
  }
  std::map<std::string, std::string> owner;
  for (const auto& b : q.buckets) {
    if (!b.members.contains(b.head)) {
      out.push_back({"quota-head", "bucket head " + b.head + " is not one of its members", b.head});
    }
    std::set<std::string> countries = b.members;
    countries.insert(b.head);
    for (const auto& c : countries) {
      auto [it, inserted] = owner.emplace(c, b.head);
      if (!inserted && it->second != b.head) {
        out.push_back({"quota-overlap",
                       "country " + c + " is in buckets " + it->second + " and " + b.head, b.head});
      } else if (!inserted) {
        out.push_back({"quota-overlap", "duplicate bucket head " + b.head, b.head});
      }
    }
  }
  return out;
}

}  // namespace crowdctl::workers
