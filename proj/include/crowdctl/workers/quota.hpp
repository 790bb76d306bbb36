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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/workers/policy.hpp"

namespace crowdctl::workers {

// Head country of the bucket containing `country`, or "rest".
std::string bucket_of(const QuotaConfig& q, const std::string& country);

struct QuotaCheck {
  bool allowed = true;
  std::string bucket;
  std::map<std::string, double> shares;  // bucket -> judgment share
};

// Shares are bucket judgments over all judgments. Under hard-block a bucket
// at or above max-share is refused; the rest bucket only when it has its
// own cap. No judgments yet means everything is allowed. Soft-rotate never
// refuses here: rotation is its control.
QuotaCheck check_quota(const QuotaConfig& q, const std::map<std::string, std::int64_t>& counts,
                       const std::string& country);

// Latin-rectangle round robin: at checkpoint k bucket b is offered group set
// (b + k) mod L with L = max(buckets, sets); a slot >= sets leaves the bucket
// resting for that period. A single bucket never rotates.
std::vector<std::optional<std::size_t>> rotation_mapping(std::size_t buckets, std::size_t sets,
                                                         std::int64_t checkpoint);

// Splits groups round-robin into `sets` non-empty sets (declaration order).
std::vector<std::vector<std::string>> partition_groups(const std::vector<std::string>& groups,
                                                       std::size_t sets);

struct BucketRotation {
  std::int64_t checkpoint = 0;
  std::vector<std::vector<std::string>> group_sets;
  // bucket head -> offered set index, nullopt while resting. The rest
  // bucket is not rotated and is offered every group.
  std::map<std::string, std::optional<std::size_t>> offered;

  // Groups a new worker from `bucket` may be assigned to.
  std::vector<std::string> groups_for(const std::string& bucket,
                                      const std::vector<std::string>& all) const;
};

BucketRotation rotation_for(const QuotaConfig& q, const std::vector<std::string>& groups,
                            std::int64_t checkpoint);
Json to_json(const BucketRotation& r);

}  // namespace crowdctl::workers
