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

#include "crowdctl/orchestrator/controller.hpp"

#include <algorithm>

#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"

namespace crowdctl::orchestrator {
namespace {

constexpr std::string_view kSchedulerNs = "scheduler";
constexpr std::string_view kPendingQuotaNs = "pending-quota";

}  // namespace

RunController::RunController(store::Store& store, engine::Engine& engine,
                             workers::WorkerManager& workers, const Clock& clock,
                             std::string run_id)
    : store_(store), engine_(engine), workers_(workers), clock_(clock), run_id_(std::move(run_id)) {
  if (!engine_.is_loaded(run_id_)) engine_.resume_run(run_id_);
  const auto& def = engine_.definition(run_id_);
  const auto options = engine_.options(run_id_);
  expected_token_ = platform::hook_token(engine_.hook_secret(run_id_), run_id_);

  if (def.schedule) {
    schedule_ = *def.schedule;
  } else {
    schedule_.checkpoint_every.judgments = kDefaultCheckpointJudgments;
  }
  if (!schedule_.checkpoint_every.judgments && !schedule_.checkpoint_every.duration) {
    schedule_.checkpoint_every.judgments = kDefaultCheckpointJudgments;
  }
  tick_schedule_ = schedule_;
  gate_ = options.toggles.schedule && def.schedule.has_value();
  if (!gate_) tick_schedule_.windows.clear();

  for (const auto& b : def.blocks) {
    if (const auto* d = b.as_do()) group_of_block_[b.id] = d->group;
  }
  for (const auto& u : engine_.units(run_id_)) units_[u.id] = u;

  if (auto saved = store_.get(kSchedulerNs, run_id_)) {
    state_ = scheduler::scheduler_state_from_json(Json::parse(saved->value));
  } else {
    state_.run_id = run_id_;
    state_.window_counts.resize(scheduler::window_count(schedule_));
  }
}

void RunController::persist() { store_.put(kSchedulerNs, run_id_, to_json(state_).dump()); }

workers::AssignmentDecision RunController::eligibility(const std::string& platform_worker_id,
                                                       const std::string& fingerprint,
                                                       const std::string& country,
                                                       const std::string& block_id,
                                                       const std::string& hook_token) {
  if (!constant_time_equal(hook_token, expected_token_)) {
    throw Error(errc::forbidden, "invalid eligibility hook token");
  }
  const auto run = store_.get_run(run_id_);
  if (!run) throw Error(errc::not_found, "unknown run " + run_id_);
  if (run->status != store::RunStatus::running && run->status != store::RunStatus::paused) {
    throw Error(errc::invalid_state,
                "run " + run_id_ + " is " + std::string(store::to_string(run->status)));
  }
  return workers_.decide_eligibility(run_id_, platform_worker_id, fingerprint, country, block_id);
}

platform::PageDecision RunController::on_page_load(const platform::PageLoad& load) {
  platform::PageDecision out;
  try {
    const auto d = eligibility(load.platform_worker_id, load.fingerprint, load.country,
                               load.block_id, load.hook_token);
    out.proceed = d.action == workers::Action::proceed;
    out.group_id = d.group_id.value_or("");
    out.block_id = d.block_id.value_or(load.block_id);
    out.reason = std::string(workers::to_string(d.reason));
    out.message = d.message;
    out.worker_id = d.canonical_id;
  } catch (const Error& e) {
    out.proceed = false;
    out.block_id = load.block_id;
    out.reason = e.code();
    out.message = e.what();
  }
  return out;
}

platform::SubmitAck RunController::on_submit(const platform::Submission& sub) {
  std::lock_guard lock(mu_);
  auto refuse = [](std::string reason) { return platform::SubmitAck{false, std::move(reason), {}}; };

  const auto run = store_.get_run(run_id_);
  if (!run || run->status != store::RunStatus::running) return refuse("run-not-running");
  if (!engine_.block_collecting(run_id_, sub.block_id)) return refuse("task-closed");
  auto group = group_of_block_.find(sub.block_id);
  if (group == group_of_block_.end()) return refuse("unknown-block");
  auto unit = units_.find(sub.unit_id);
  if (unit == units_.end()) return refuse("unknown-unit");
  if (gate_ && !scheduler::admits_judgment(state_, schedule_, group->second, sub.at)) {
    return refuse(scheduler::is_active(schedule_, sub.at) ? "window-balance" : "outside-window");
  }

  platform::Judgment j;
  j.unit_id = sub.unit_id;
  j.platform_worker_id = sub.platform_worker_id;
  j.fingerprint = sub.fingerprint;
  j.block_id = sub.block_id;
  j.answer = sub.answer;
  j.decision_time_s = sub.decision_time_s;
  j.submitted_at = sub.at;
  j.country = sub.country;
  j.is_gold = unit->second.gold.has_value();
  if (j.is_gold) j.gold_correct = sub.answer == unit->second.gold->expected_answer;

  const std::string cid = sub.worker_id.empty()
                              ? workers_.resolve_identity(sub.platform_worker_id, sub.fingerprint, run_id_)
                              : sub.worker_id;
  std::optional<platform::Judgment> admitted;
  try {
    admitted = workers_.admit_judgment(run_id_, cid, std::move(j));
  } catch (const Error& e) {
    if (e.code() != errc::protocol_violation) throw;
    return refuse("protocol-violation");
  }
  if (!admitted) return refuse("quota-exhausted");

  if (scheduler::window_index(schedule_, sub.at)) {
    scheduler::note_judgment(state_, schedule_, admitted->group_id, sub.at);
  } else {
    ++state_.judgments_since_checkpoint;
  }
  persist();
  return platform::SubmitAck{true, "", admitted};
}

void RunController::checkpoint(Timestamp now) {
  if (auto q = pending_quota_edit()) {
    workers_.apply_quotas(run_id_, *q);
    store_.put(kPendingQuotaNs, run_id_, "null");
  }
  const auto& ctx = workers_.context(run_id_);
  if (ctx.quotas && ctx.enforce_quotas &&
      ctx.quotas->enforcement == workers::QuotaEnforcement::soft_rotate) {
    workers_.rotate_buckets(run_id_);
  }
  store_.append_audit(run_id_, "checkpoint", Json{{"checkpoint", state_.checkpoints}}, now);
}

std::vector<scheduler::Command> RunController::tick(Timestamp now) { return tick_as(now, "schedule"); }

std::vector<scheduler::Command> RunController::tick_as(Timestamp now, const std::string& by) {
  std::lock_guard lock(mu_);
  const auto run = store_.get_run(run_id_);
  if (!run || (run->status != store::RunStatus::running && run->status != store::RunStatus::paused)) {
    return {};
  }
  const auto cmds = scheduler::on_tick(state_, tick_schedule_, now);
  // Checkpoint effects and the new scheduler state commit together, so a
  // restart neither repeats nor loses a checkpoint.
  store_.transact([&] {
    if (std::find(cmds.begin(), cmds.end(), scheduler::Command::checkpoint) != cmds.end()) {
      checkpoint(now);
    }
    persist();
  });
  for (auto c : cmds) {
    if (c == scheduler::Command::pause_run) engine_.pause_run(run_id_, by);
    if (c == scheduler::Command::resume_run) engine_.continue_run(run_id_, by);
  }
  return cmds;
}

void RunController::request_quota_edit(const workers::QuotaConfig& q) {
  const auto violations = workers::validate_quotas(q);
  if (!violations.empty()) throw ValidationFailed(violations);
  store_.transact([&] {
    store_.put(kPendingQuotaNs, run_id_, to_json(q).dump());
    store_.append_audit(run_id_, "quota-edit-requested", to_json(q), clock_.now());
  });
}

std::optional<workers::QuotaConfig> RunController::pending_quota_edit() {
  auto v = store_.get(kPendingQuotaNs, run_id_);
  if (!v || v->value == "null") return std::nullopt;
  return workers::quotas_from_json(Json::parse(v->value));
}

void RunController::user_pause() {
  {
    std::lock_guard lock(mu_);
    state_.paused_by_user = true;
    persist();
  }
  tick_as(clock_.now(), "user");
}

void RunController::user_resume() {
  {
    std::lock_guard lock(mu_);
    state_.paused_by_user = false;
    persist();
  }
  tick_as(clock_.now(), "user");
}

scheduler::SchedulerState RunController::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

Json RunController::state_json() const {
  std::lock_guard lock(mu_);
  return Json{{"state", to_json(state_)},
              {"schedule", to_json(schedule_)},
              {"gating", gate_},
              {"activeNow", scheduler::is_active(tick_schedule_, clock_.now())},
              {"balance", to_json(scheduler::window_balance(state_))}};
}

}  // namespace crowdctl::orchestrator
