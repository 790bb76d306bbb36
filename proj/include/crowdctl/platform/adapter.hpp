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
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/platform/judgment.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::platform {

struct TaskHandle {
  std::string adapter_id;
  std::string platform_task_id;
  Timestamp created_at;

  bool operator==(const TaskHandle&) const = default;
};

Json to_json(const TaskHandle& h);
TaskHandle task_handle_from_json(const Json& j);

struct Progress {
  std::int64_t judgments = 0;
  bool paused = false;
  bool cancelled = false;
};

struct FetchResult {
  std::vector<Judgment> judgments;
  std::string next_cursor;
};

// Capability set every crowd platform integration implements. publish is
// idempotent under the same token; fetch_judgments is cursor-monotone.
class Adapter {
 public:
  virtual ~Adapter() = default;

  virtual std::string id() const = 0;
  // UI element kinds this platform can render.
  virtual std::set<workflow::UiKind> capabilities() const = 0;

  // Finds a task previously created under `idempotency_token`. Lets a
  // recovering engine re-attach without calling publish again.
  virtual std::optional<TaskHandle> lookup(const std::string& idempotency_token) = 0;
  virtual TaskHandle publish(const Json& payload, const std::vector<workflow::DataUnit>& units,
                             const std::string& idempotency_token) = 0;
  virtual Progress status(const TaskHandle& h) = 0;
  virtual void pause(const TaskHandle& h) = 0;
  virtual void resume(const TaskHandle& h) = 0;
  virtual FetchResult fetch_judgments(const TaskHandle& h, const std::string& cursor) = 0;
  virtual void cancel(const TaskHandle& h) = 0;
  virtual std::optional<std::string> worker_country(const std::string& platform_worker_id) = 0;
};

std::set<workflow::UiKind> all_ui_kinds();

class AdapterRegistry {
 public:
  void add(std::shared_ptr<Adapter> adapter);
  std::shared_ptr<Adapter> get(const std::string& id) const;
  bool contains(const std::string& id) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Adapter>> adapters_;
};

struct EligibilityHook {
  std::string url;
  std::string token;
};

// Per-run hook token: HMAC of the run id under the run secret. Task pages
// present it when calling the eligibility endpoint.
std::string hook_token(const std::string& run_secret, const std::string& run_id);

// Maps every UI element to a platform payload fragment and embeds the
// eligibility hook. Throws unsupported-element naming the first element the
// adapter cannot render.
Json translate_template(const workflow::TaskTemplate& t, const Adapter& adapter,
                        const EligibilityHook& hook);

}  // namespace crowdctl::platform
