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

#include "crowdctl/platform/file_adapter.hpp"

#include <fstream>

#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"
#include "crowdctl/workflow/codec.hpp"

namespace crowdctl::platform {

namespace fs = std::filesystem;

FileAdapter::FileAdapter(fs::path root, const Clock& clock) : root_(std::move(root)), clock_(clock) {
  fs::create_directories(root_);
}

std::set<workflow::UiKind> FileAdapter::capabilities() const { return all_ui_kinds(); }

fs::path FileAdapter::task_dir(const TaskHandle& h) const { return root_ / h.platform_task_id; }

std::optional<TaskHandle> FileAdapter::lookup(const std::string& idempotency_token) {
  std::lock_guard lock(mu_);
  const std::string task_id = "task-" + sha256_hex(idempotency_token).substr(0, 20);
  const fs::path task_file = root_ / task_id / "task.json";
  if (!fs::exists(task_file)) return std::nullopt;
  const Json existing = parse_json(read_file(task_file.string()), "task.json");
  return TaskHandle{id(), task_id, parse_utc(existing.at("createdAt").get<std::string>())};
}

TaskHandle FileAdapter::publish(const Json& payload, const std::vector<workflow::DataUnit>& units,
                                const std::string& idempotency_token) {
  std::lock_guard lock(mu_);
  const std::string task_id = "task-" + sha256_hex(idempotency_token).substr(0, 20);
  const fs::path dir = root_ / task_id;
  const fs::path task_file = dir / "task.json";
  if (fs::exists(task_file)) {
    const Json existing = parse_json(read_file(task_file.string()), "task.json");
    return TaskHandle{id(), task_id, parse_utc(existing.at("createdAt").get<std::string>())};
  }
  fs::create_directories(dir);
  const TaskHandle h{id(), task_id, clock_.now()};
  const Json task{{"taskId", task_id},
                  {"idempotencyToken", idempotency_token},
                  {"createdAt", format_utc(h.created_at)},
                  {"state", "open"},
                  {"payload", payload},
                  {"units", workflow::to_json(units)}};
  // Write the judgments file first so a visible task.json always has one.
  std::ofstream(dir / "judgments.ndjson", std::ios::app).close();
  const fs::path tmp = dir / "task.json.tmp";
  write_file(tmp.string(), task.dump(2));
  fs::rename(tmp, task_file);
  return h;
}

void FileAdapter::set_state(const TaskHandle& h, const std::string& state) {
  std::lock_guard lock(mu_);
  const fs::path task_file = task_dir(h) / "task.json";
  if (!fs::exists(task_file)) throw Error(errc::not_found, "unknown task " + h.platform_task_id);
  Json task = parse_json(read_file(task_file.string()), "task.json");
  if (task["state"] == "cancelled") return;
  task["state"] = state;
  const fs::path tmp = task_dir(h) / "task.json.tmp";
  write_file(tmp.string(), task.dump(2));
  fs::rename(tmp, task_file);
}

void FileAdapter::pause(const TaskHandle& h) { set_state(h, "paused"); }
void FileAdapter::resume(const TaskHandle& h) { set_state(h, "open"); }
void FileAdapter::cancel(const TaskHandle& h) { set_state(h, "cancelled"); }

Progress FileAdapter::status(const TaskHandle& h) {
  const fs::path task_file = task_dir(h) / "task.json";
  if (!fs::exists(task_file)) throw Error(errc::not_found, "unknown task " + h.platform_task_id);
  const Json task = parse_json(read_file(task_file.string()), "task.json");
  Progress p;
  p.paused = task["state"] == "paused";
  p.cancelled = task["state"] == "cancelled";
  std::ifstream in(task_dir(h) / "judgments.ndjson");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++p.judgments;
  }
  return p;
}

Judgment parse_judgment_line(std::string_view line) {
  const Json j = parse_json(line, "judgment line");
  ObjectReader r(j, "judgment");
  Judgment out;
  out.unit_id = r.required<std::string>("unit-id");
  out.platform_worker_id = r.required<std::string>("worker-id");
  out.fingerprint = r.required<std::string>("fingerprint");
  out.answer = r.required<std::string>("answer");
  out.decision_time_s = static_cast<double>(r.required<std::int64_t>("decision-time-ms")) / 1000.0;
  out.submitted_at = parse_utc(r.required<std::string>("timestamp"));
  out.country = r.value_or<std::string>("country", "");
  r.finish();
  return out;
}

FetchResult FileAdapter::fetch_judgments(const TaskHandle& h, const std::string& cursor) {
  std::ifstream in(task_dir(h) / "judgments.ndjson", std::ios::binary);
  if (!in) throw Error(errc::adapter_failure, "cannot read judgments of " + h.platform_task_id);
  std::streamoff offset = cursor.empty() ? 0 : std::stoll(cursor);
  in.seekg(offset);
  FetchResult r;
  std::string line;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // trailing line without newline is still being written
    offset += static_cast<std::streamoff>(line.size()) + 1;
    if (line.empty()) continue;
    r.judgments.push_back(parse_judgment_line(line));
  }
  r.next_cursor = std::to_string(offset);
  return r;
}

std::optional<std::string> FileAdapter::worker_country(const std::string& platform_worker_id) {
  const fs::path f = root_ / "workers.json";
  if (!fs::exists(f)) return std::nullopt;
  const Json j = parse_json(read_file(f.string()), "workers.json");
  if (!j.contains(platform_worker_id)) return std::nullopt;
  return j[platform_worker_id].get<std::string>();
}

}  // namespace crowdctl::platform
