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

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/engine/engine.hpp"
#include "crowdctl/platform/gateway.hpp"
#include "crowdctl/scheduler/schedule.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workers/manager.hpp"

namespace crowdctl::orchestrator {

// Checkpoint cadence for runs whose workflow has no schedule, so quota
// edits and bucket rotation still have a point to fire at.
inline constexpr std::int64_t kDefaultCheckpointJudgments = 50;

// Live side of one run: answers task pages (eligibility and submissions)
// and turns scheduler ticks into engine commands. Scheduler state is
// persisted on every change so a restarted process picks up where the old
// one stopped.
class RunController final : public platform::TaskPageGateway {
 public:
  RunController(store::Store& store, engine::Engine& engine, workers::WorkerManager& workers,
                const Clock& clock, std::string run_id);

  const std::string& run_id() const { return run_id_; }

  // Eligibility hook. Throws forbidden on a bad hook token and
  // invalid-state when the run no longer collects.
  workers::AssignmentDecision eligibility(const std::string& platform_worker_id,
                                          const std::string& fingerprint,
                                          const std::string& country, const std::string& block_id,
                                          const std::string& hook_token);

  platform::PageDecision on_page_load(const platform::PageLoad& load) override;
  platform::SubmitAck on_submit(const platform::Submission& submission) override;

  // Scheduler tick: pause/resume on window edges, checkpoints (pending
  // quota edits, bucket rotation). Returns the commands it executed.
  std::vector<scheduler::Command> tick(Timestamp now);

  // Live quota edit; takes effect at the next checkpoint.
  void request_quota_edit(const workers::QuotaConfig& q);
  std::optional<workers::QuotaConfig> pending_quota_edit();

  // User controls go through the same command stream as window edges, so
  // pause and resume always alternate.
  void user_pause();
  void user_resume();

  scheduler::SchedulerState state() const;
  const scheduler::Schedule& schedule() const { return schedule_; }
  bool gating() const { return gate_; }
  Json state_json() const;

 private:
  void persist();
  void checkpoint(Timestamp now);
  std::vector<scheduler::Command> tick_as(Timestamp now, const std::string& by);

  store::Store& store_;
  engine::Engine& engine_;
  workers::WorkerManager& workers_;
  const Clock& clock_;
  std::string run_id_;
  std::string expected_token_;
  scheduler::Schedule schedule_;       // windows used for counting
  scheduler::Schedule tick_schedule_;  // windows cleared when the toggle is off
  bool gate_ = false;                  // enforce windows and balance on submissions
  std::map<std::string, std::string> group_of_block_;
  std::map<std::string, workflow::DataUnit> units_;

  mutable std::mutex mu_;
  scheduler::SchedulerState state_;
};

}  // namespace crowdctl::orchestrator
