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

#include "crowdctl/common/time.hpp"
#include "crowdctl/platform/judgment.hpp"

namespace crowdctl::platform {

// What a live task page sends when it loads (the eligibility hook call).
struct PageLoad {
  std::string block_id;
  std::string platform_worker_id;
  std::string fingerprint;
  std::string country;
  std::string hook_token;
  Timestamp at;
};

struct PageDecision {
  bool proceed = false;
  std::string group_id;
  std::string block_id;
  std::string reason;
  std::string message;
  std::string worker_id;
};

struct Submission {
  std::string block_id;
  std::string platform_worker_id;
  std::string fingerprint;
  std::string worker_id;  // canonical id handed out with the page decision
  std::string country;
  std::string unit_id;
  std::string answer;
  double decision_time_s = 0.0;
  Timestamp at;
};

struct SubmitAck {
  bool accepted = false;
  std::string reason;  // why a submission was refused
  std::optional<Judgment> judgment;
};

// Server side of the task page: eligibility on load, gating and
// attribution on every submitted answer.
class TaskPageGateway {
 public:
  virtual ~TaskPageGateway() = default;
  virtual PageDecision on_page_load(const PageLoad& load) = 0;
  virtual SubmitAck on_submit(const Submission& submission) = 0;
};

}  // namespace crowdctl::platform
