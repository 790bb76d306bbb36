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

#include "crowdctl/workers/quota.hpp"

#include <algorithm>

namespace crowdctl::workers {

std::string bucket_of(const QuotaConfig& q, const std::string& country) {
  for (const auto& b : q.buckets) {
    if (b.members.contains(country)) return b.head;
  }
  return std::string(kRestBucket);
}

QuotaCheck check_quota(const QuotaConfig& q, const std::map<std::string, std::int64_t>& counts,
                       const std::string& country) {
  QuotaCheck out;
  out.bucket = bucket_of(q, country);
  std::int64_t total = 0;
  for (const auto& [_, n] : counts) total += n;
  for (const auto& b : q.buckets) out.shares[b.head] = 0.0;
  out.shares[std::string(kRestBucket)] = 0.0;
  if (total == 0) return out;
  for (const auto& [bucket, n] : counts) {
    out.shares[bucket] = static_cast<double>(n) / static_cast<double>(total);
  }
  if (q.enforcement != QuotaEnforcement::hard_block) return out;
  const double share = out.shares[out.bucket];
  if (out.bucket == kRestBucket) {
    out.allowed = !q.rest_cap || share < *q.rest_cap;
  } else {
    out.allowed = share < q.max_share;
  }
  return out;
}

std::vector<std::optional<std::size_t>> rotation_mapping(std::size_t buckets, std::size_t sets,
                                                         std::int64_t checkpoint) {
  std::vector<std::optional<std::size_t>> out(buckets);
  if (sets == 0) return out;
  if (buckets == 1) {
    out[0] = 0;
    return out;
  }
  const std::size_t l = std::max(buckets, sets);
  const auto k = static_cast<std::size_t>(checkpoint % static_cast<std::int64_t>(l));
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::size_t slot = (b + k) % l;
    if (slot < sets) out[b] = slot;
  }
  return out;
}

std::vector<std::vector<std::string>> partition_groups(const std::vector<std::string>& groups,
                                                       std::size_t sets) {
  sets = std::min(sets, groups.size());
  std::vector<std::vector<std::string>> out(sets);
  for (std::size_t i = 0; i < groups.size() && sets > 0; ++i) out[i % sets].push_back(groups[i]);
  return out;
}

std::vector<std::string> BucketRotation::groups_for(const std::string& bucket,
                                                    const std::vector<std::string>& all) const {
  auto it = offered.find(bucket);
  if (it == offered.end()) return all;
  if (!it->second) return {};
  return group_sets[*it->second];
}

BucketRotation rotation_for(const QuotaConfig& q, const std::vector<std::string>& groups,
                            std::int64_t checkpoint) {
  BucketRotation r;
  r.checkpoint = checkpoint;
  r.group_sets = partition_groups(groups, q.buckets.size());
  const auto mapping = rotation_mapping(q.buckets.size(), r.group_sets.size(), checkpoint);
  for (std::size_t b = 0; b < q.buckets.size(); ++b) r.offered[q.buckets[b].head] = mapping[b];
  return r;
}

Json to_json(const BucketRotation& r) {
  Json offered = Json::object();
  for (const auto& [bucket, set] : r.offered) {
    offered[bucket] = set ? Json(r.group_sets[*set]) : Json(nullptr);
  }
  return Json{{"checkpoint", r.checkpoint}, {"offered", offered}};
}

}  // namespace crowdctl::workers
