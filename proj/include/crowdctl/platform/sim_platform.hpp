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
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "crowdctl/common/time.hpp"
#include "crowdctl/platform/adapter.hpp"
#include "crowdctl/platform/gateway.hpp"
#include "crowdctl/platform/population.hpp"

namespace crowdctl::platform {

struct SimStats {
  std::int64_t arrivals = 0;
  std::int64_t returns = 0;
  std::int64_t page_loads = 0;
  std::int64_t blocked_sessions = 0;
  std::int64_t submitted = 0;
  std::int64_t accepted = 0;
  std::int64_t publish_calls = 0;
  std::int64_t tasks_created = 0;
};

// Discrete-event simulated crowd platform. Virtual time moves only inside
// advance_to, event to event; equal times are ordered by sequence number.
// Workers load pages through the gateway exactly like live task pages, so
// every control (eligibility, quotas, schedule) is exercised end to end.
class SimPlatform final : public Adapter {
 public:
  SimPlatform(PopulationProfile profile, ManualClock& clock, Timestamp start);
  ~SimPlatform() override;

  std::string id() const override { return "sim"; }
  std::set<workflow::UiKind> capabilities() const override { return all_ui_kinds(); }

  std::optional<TaskHandle> lookup(const std::string& idempotency_token) override;
  TaskHandle publish(const Json& payload, const std::vector<workflow::DataUnit>& units,
                     const std::string& idempotency_token) override;
  Progress status(const TaskHandle& h) override;
  void pause(const TaskHandle& h) override;
  void resume(const TaskHandle& h) override;
  FetchResult fetch_judgments(const TaskHandle& h, const std::string& cursor) override;
  void cancel(const TaskHandle& h) override;
  std::optional<std::string> worker_country(const std::string& platform_worker_id) override;

  void set_gateway(TaskPageGateway* gateway) { gateway_ = gateway; }
  // Condition kinds per group, for crossover behavior.
  void set_group_kinds(std::map<std::string, workflow::ConditionKind> kinds);

  // Processes every event strictly before `t`, then sets the clock to `t`.
  void advance_to(Timestamp t);
  Timestamp now() const { return now_; }

  const SimStats& stats() const { return stats_; }
  // Trace of processed events (arrivals, page loads, submissions, returns).
  const std::vector<SimEvent>& trace() const { return trace_; }
  void set_trace_enabled(bool on) { trace_enabled_ = on; }
  // Publish calls per idempotency token.
  const std::map<std::string, std::int64_t>& publish_calls() const { return publish_calls_; }

  // Fault injection for adapter-failure handling: the next `n` publish calls
  // throw adapter-failure.
  void fail_next_publishes(int n) { fail_publishes_ = n; }

 private:
  struct Task;
  struct Worker;
  struct Pending {
    Timestamp time;
    std::uint64_t seq;
    SimEventKind kind;
    std::int64_t worker;
    std::uint64_t session;  // stale events (aborted sessions) are dropped
    std::size_t unit_slot;  // judgment events: index into the page's units
    std::string country;    // arrivals
    bool operator>(const Pending& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  void push(Pending e);
  void generate_arrivals_until(Timestamp t);
  void handle(const Pending& e);
  void on_arrival(const Pending& e);
  void start_session(Worker& w, Timestamp t, bool returning);
  void on_page(Worker& w, Timestamp t);
  void on_judgment(Worker& w, const Pending& e);
  void end_session(Worker& w, Timestamp t);
  Task* open_task(const std::string& block_id);
  std::vector<Task*> open_tasks();
  void record(SimEventKind kind, Timestamp t, std::int64_t worker, const std::string& country,
              std::string detail);

  PopulationProfile profile_;
  ManualClock& clock_;
  Timestamp now_;
  Timestamp arrivals_generated_until_;
  TaskPageGateway* gateway_ = nullptr;
  std::map<std::string, workflow::ConditionKind> group_kinds_;

  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 0;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::vector<std::string> fingerprints_;
  std::map<std::string, std::unique_ptr<Task>> tasks_;        // by task id
  std::map<std::string, std::string> task_by_block_;          // block id -> task id
  std::map<std::string, std::string> task_by_token_;
  std::map<std::string, std::string> country_by_worker_;
  std::map<std::string, std::int64_t> publish_calls_;
  SimStats stats_;
  std::vector<SimEvent> trace_;
  bool trace_enabled_ = true;
  int fail_publishes_ = 0;
  std::mutex mu_;
};

// Deterministic "true" answer of a non-gold unit: a hash of its id picks
// one of the options.
std::string simulated_truth(const std::string& unit_id, const std::vector<std::string>& options);

}  // namespace crowdctl::platform
