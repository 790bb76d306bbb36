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

#include <filesystem>
#include <mutex>
#include <string>

#include "crowdctl/common/time.hpp"
#include "crowdctl/platform/adapter.hpp"

namespace crowdctl::platform {

// Offline adapter: each published task becomes a directory holding
// task.json (translated payload + units + state) and an append-only
// judgments.ndjson filled by whoever runs the task by hand. One judgment
// per line:
//   {"unit-id", "worker-id", "fingerprint", "answer", "decision-time-ms",
//    "timestamp", optional "country"}
// The cursor is the byte offset after the last complete line consumed.
// Worker countries come from an optional workers.json ({worker-id: code})
// in the root directory.
class FileAdapter final : public Adapter {
 public:
  FileAdapter(std::filesystem::path root, const Clock& clock);

  std::string id() const override { return "file"; }
  std::set<workflow::UiKind> capabilities() const override;

  std::optional<TaskHandle> lookup(const std::string& idempotency_token) override;
  TaskHandle publish(const Json& payload, const std::vector<workflow::DataUnit>& units,
                     const std::string& idempotency_token) override;
  Progress status(const TaskHandle& h) override;
  void pause(const TaskHandle& h) override;
  void resume(const TaskHandle& h) override;
  FetchResult fetch_judgments(const TaskHandle& h, const std::string& cursor) override;
  void cancel(const TaskHandle& h) override;
  std::optional<std::string> worker_country(const std::string& platform_worker_id) override;

  std::filesystem::path task_dir(const TaskHandle& h) const;

 private:
  void set_state(const TaskHandle& h, const std::string& state);

  std::filesystem::path root_;
  const Clock& clock_;
  std::mutex mu_;
};

// Parses one judgments.ndjson line (strict keys).
Judgment parse_judgment_line(std::string_view line);

}  // namespace crowdctl::platform
