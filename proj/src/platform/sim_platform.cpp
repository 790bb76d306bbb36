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

#include "crowdctl/platform/sim_platform.hpp"

#include <algorithm>
#include <cmath>

#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"

namespace crowdctl::platform {

using workflow::ConditionKind;
using workflow::DataUnit;

struct SimPlatform::Task {
  TaskHandle handle;
  std::string token;
  std::string block_id;
  std::string group_id;
  int votes_per_unit = 1;
  workflow::Paging paging;
  std::vector<std::string> options;
  std::string hook_token;
  std::vector<DataUnit> units;
  std::vector<std::size_t> gold;
  std::vector<std::size_t> plain;
  std::vector<int> votes;  // accepted trusted votes per unit index
  enum class State { open, paused, cancelled } state = State::open;
  std::vector<Judgment> log;
};

struct SimPlatform::Worker {
  struct PageItem {
    std::size_t unit;
    std::string answer;
    double decision_time_s;
  };

  std::int64_t serial = 0;
  std::string pid;
  std::string fp;
  std::string country;
  std::mt19937_64 rng;
  bool returner = false;
  int budget[2] = {0, 0};
  int session_no = 0;
  std::uint64_t session = 0;
  bool in_session = false;

  std::optional<std::string> first_group;
  std::set<std::string> visited_blocks;
  std::set<std::string> seen;  // "block|unit"

  std::string task_id;
  std::string block_id;
  std::string group_id;
  std::string canonical;
  int pages_left = 0;
  int pages_in_block = 0;
  std::vector<PageItem> page;
};

namespace {

std::int64_t ms_of(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1000.0)); }

}  // namespace

std::string simulated_truth(const std::string& unit_id, const std::vector<std::string>& options) {
  if (options.empty()) return "";
  const std::string h = sha256_hex(unit_id);
  const auto v = std::stoull(h.substr(0, 12), nullptr, 16);
  return options[v % options.size()];
}

SimPlatform::SimPlatform(PopulationProfile profile, ManualClock& clock, Timestamp start)
    : profile_(std::move(profile)), clock_(clock), now_(start) {
  const std::int64_t ms = to_epoch_ms(start);
  arrivals_generated_until_ = from_epoch_ms(ms - ms % 3'600'000);
  clock_.set(start);
}

SimPlatform::~SimPlatform() = default;

void SimPlatform::set_group_kinds(std::map<std::string, ConditionKind> kinds) {
  std::lock_guard lock(mu_);
  group_kinds_ = std::move(kinds);
}

std::optional<TaskHandle> SimPlatform::lookup(const std::string& idempotency_token) {
  std::lock_guard lock(mu_);
  auto it = task_by_token_.find(idempotency_token);
  if (it == task_by_token_.end()) return std::nullopt;
  return tasks_.at(it->second)->handle;
}

TaskHandle SimPlatform::publish(const Json& payload, const std::vector<DataUnit>& units,
                                const std::string& idempotency_token) {
  std::lock_guard lock(mu_);
  ++stats_.publish_calls;
  ++publish_calls_[idempotency_token];
  if (fail_publishes_ > 0) {
    --fail_publishes_;
    throw Error(errc::adapter_failure, "simulated publish failure");
  }
  if (auto it = task_by_token_.find(idempotency_token); it != task_by_token_.end()) {
    return tasks_.at(it->second)->handle;
  }
  auto t = std::make_unique<Task>();
  t->token = idempotency_token;
  t->handle = TaskHandle{id(), "sim-" + sha256_hex(idempotency_token).substr(0, 16), now_};
  t->block_id = payload.at("blockId").get<std::string>();
  t->group_id = payload.at("groupId").get<std::string>();
  t->votes_per_unit = payload.at("votesPerUnit").get<int>();
  if (payload.contains("eligibilityHook")) {
    t->hook_token = payload["eligibilityHook"].at("token").get<std::string>();
  }
  const Json& paging = payload.at("paging");
  t->paging.units_per_page = paging.at("unitsPerPage").get<int>();
  t->paging.gold_per_page = paging.at("goldPerPage").get<int>();
  t->paging.first_page_all_gold = paging.at("firstPageAllGold").get<bool>();
  t->paging.max_pages = paging.at("maxPages").get<int>();
  for (const auto& f : payload.at("fragments")) {
    if (f.value("type", "") == "choice") {
      t->options = f.at("options").get<std::vector<std::string>>();
      break;
    }
  }
  t->units = units;
  t->votes.assign(units.size(), 0);
  for (std::size_t i = 0; i < units.size(); ++i) (units[i].gold ? t->gold : t->plain).push_back(i);
  const std::string task_id = t->handle.platform_task_id;
  task_by_token_[idempotency_token] = task_id;
  task_by_block_[t->block_id] = task_id;
  const TaskHandle h = t->handle;
  tasks_[task_id] = std::move(t);
  ++stats_.tasks_created;
  return h;
}

Progress SimPlatform::status(const TaskHandle& h) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(h.platform_task_id);
  if (it == tasks_.end()) throw Error(errc::not_found, "unknown task " + h.platform_task_id);
  Progress p;
  p.judgments = static_cast<std::int64_t>(it->second->log.size());
  p.paused = it->second->state == Task::State::paused;
  p.cancelled = it->second->state == Task::State::cancelled;
  return p;
}

void SimPlatform::pause(const TaskHandle& h) {
  std::lock_guard lock(mu_);
  auto& t = *tasks_.at(h.platform_task_id);
  if (t.state == Task::State::open) t.state = Task::State::paused;
}

void SimPlatform::resume(const TaskHandle& h) {
  std::lock_guard lock(mu_);
  auto& t = *tasks_.at(h.platform_task_id);
  if (t.state == Task::State::paused) t.state = Task::State::open;
}

void SimPlatform::cancel(const TaskHandle& h) {
  std::lock_guard lock(mu_);
  tasks_.at(h.platform_task_id)->state = Task::State::cancelled;
}

FetchResult SimPlatform::fetch_judgments(const TaskHandle& h, const std::string& cursor) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(h.platform_task_id);
  if (it == tasks_.end()) throw Error(errc::not_found, "unknown task " + h.platform_task_id);
  const auto& log = it->second->log;
  const std::size_t from = cursor.empty() ? 0 : std::stoull(cursor);
  FetchResult r;
  if (from < log.size()) r.judgments.assign(log.begin() + static_cast<std::ptrdiff_t>(from), log.end());
  r.next_cursor = std::to_string(std::max(from, log.size()));
  return r;
}

std::optional<std::string> SimPlatform::worker_country(const std::string& platform_worker_id) {
  std::lock_guard lock(mu_);
  auto it = country_by_worker_.find(platform_worker_id);
  if (it == country_by_worker_.end()) return std::nullopt;
  return it->second;
}

void SimPlatform::push(Pending e) {
  e.seq = next_seq_++;
  queue_.push(std::move(e));
}

void SimPlatform::record(SimEventKind kind, Timestamp t, std::int64_t worker,
                         const std::string& country, std::string detail) {
  if (!trace_enabled_) return;
  trace_.push_back(SimEvent{t, trace_.size(), kind, worker, country, std::move(detail)});
}

void SimPlatform::generate_arrivals_until(Timestamp t) {
  while (arrivals_generated_until_ < t) {
    const Timestamp end = arrivals_generated_until_ + std::chrono::hours(1);
    for (auto& a : simulate_arrivals(profile_, arrivals_generated_until_, end)) {
      if (a.time < now_) continue;
      push(Pending{a.time, 0, SimEventKind::worker_arrival, -1, 0, 0, a.country});
    }
    arrivals_generated_until_ = end;
  }
}

void SimPlatform::advance_to(Timestamp t) {
  std::lock_guard lock(mu_);
  generate_arrivals_until(t);
  while (!queue_.empty() && queue_.top().time < t) {
    const Pending e = queue_.top();
    queue_.pop();
    now_ = e.time;
    clock_.set(now_);
    handle(e);
  }
  now_ = std::max(now_, t);
  clock_.set(now_);
}

void SimPlatform::handle(const Pending& e) {
  if (e.kind == SimEventKind::worker_arrival) {
    on_arrival(e);
    return;
  }
  Worker& w = *workers_.at(static_cast<std::size_t>(e.worker));
  switch (e.kind) {
    case SimEventKind::worker_returns:
      ++stats_.returns;
      record(SimEventKind::worker_returns, e.time, w.serial, w.country, "");
      start_session(w, e.time, true);
      break;
    case SimEventKind::page_load:
      if (w.in_session && e.session == w.session) on_page(w, e.time);
      break;
    case SimEventKind::judgment_submitted:
      if (w.in_session && e.session == w.session) on_judgment(w, e);
      break;
    case SimEventKind::worker_arrival:
      break;
  }
}

void SimPlatform::on_arrival(const Pending& e) {
  auto w = std::make_unique<Worker>();
  w->serial = static_cast<std::int64_t>(workers_.size());
  w->rng.seed(seed_mix(profile_.seed ^ 0x5157ULL, static_cast<std::uint64_t>(w->serial)));
  w->country = e.country;
  w->pid = "pw-" + std::to_string(w->serial);
  if (!fingerprints_.empty() &&
      std::bernoulli_distribution(profile_.fingerprint_collision_rate)(w->rng)) {
    std::uniform_int_distribution<std::size_t> pick(0, fingerprints_.size() - 1);
    w->fp = fingerprints_[pick(w->rng)];
  } else {
    w->fp = "fp-" + sha256_hex(std::to_string(profile_.seed) + "/" + w->pid).substr(0, 16);
  }
  fingerprints_.push_back(w->fp);
  country_by_worker_[w->pid] = w->country;

  const int budget =
      std::uniform_int_distribution<int>(profile_.pages_min, profile_.pages_max)(w->rng);
  w->returner = budget >= 2 && std::bernoulli_distribution(profile_.return_probability)(w->rng);
  if (w->returner) {
    w->budget[0] = std::uniform_int_distribution<int>(1, budget - 1)(w->rng);
    w->budget[1] = budget - w->budget[0];
  } else {
    w->budget[0] = budget;
  }
  ++stats_.arrivals;
  record(SimEventKind::worker_arrival, e.time, w->serial, w->country, w->pid);
  Worker& ref = *w;
  workers_.push_back(std::move(w));
  start_session(ref, e.time, false);
}

SimPlatform::Task* SimPlatform::open_task(const std::string& block_id) {
  auto it = task_by_block_.find(block_id);
  if (it == task_by_block_.end()) return nullptr;
  Task* t = tasks_.at(it->second).get();
  return t->state == Task::State::open ? t : nullptr;
}

std::vector<SimPlatform::Task*> SimPlatform::open_tasks() {
  std::vector<Task*> out;
  for (const auto& [block, task_id] : task_by_block_) {
    Task* t = tasks_.at(task_id).get();
    if (t->state == Task::State::open) out.push_back(t);
  }
  return out;
}

void SimPlatform::start_session(Worker& w, Timestamp t, bool returning) {
  auto open = open_tasks();
  std::vector<Task*> candidates;
  if (returning && w.first_group) {
    const bool cross = std::bernoulli_distribution(profile_.cross_condition_probability)(w.rng);
    for (Task* task : open) {
      if (w.visited_blocks.contains(task->block_id)) continue;
      if ((task->group_id != *w.first_group) == cross) candidates.push_back(task);
    }
  }
  if (candidates.empty()) {
    for (Task* task : open) {
      if (!w.visited_blocks.contains(task->block_id)) candidates.push_back(task);
    }
  }
  if (candidates.empty() || gateway_ == nullptr) {
    // Nothing to do on the platform right now; the worker leaves.
    w.in_session = true;
    end_session(w, t);
    return;
  }
  Task* landing = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(w.rng)];

  ++stats_.page_loads;
  record(SimEventKind::page_load, t, w.serial, w.country, landing->block_id);
  PageDecision d = gateway_->on_page_load(
      PageLoad{landing->block_id, w.pid, w.fp, w.country, landing->hook_token, t});
  w.in_session = true;
  ++w.session;
  if (!d.proceed) {
    ++stats_.blocked_sessions;
    end_session(w, t);
    return;
  }
  Task* routed = open_task(d.block_id);
  if (routed == nullptr) {
    end_session(w, t);
    return;
  }
  w.task_id = routed->handle.platform_task_id;
  w.block_id = routed->block_id;
  w.group_id = d.group_id;
  w.canonical = d.worker_id;
  w.pages_left = w.budget[w.session_no];
  w.pages_in_block = 0;
  w.visited_blocks.insert(w.block_id);
  if (!w.first_group) w.first_group = d.group_id;
  on_page(w, t);
}

void SimPlatform::on_page(Worker& w, Timestamp t) {
  Task* task = open_task(w.block_id);
  if (task == nullptr || w.pages_left <= 0 || w.pages_in_block >= task->paging.max_pages) {
    end_session(w, t);
    return;
  }
  if (w.pages_in_block > 0) {
    // Every page load calls the hook; a replay returns the same decision.
    ++stats_.page_loads;
    record(SimEventKind::page_load, t, w.serial, w.country, w.block_id);
    const PageDecision d = gateway_->on_page_load(PageLoad{w.block_id, w.pid, w.fp, w.country, task->hook_token, t});
    if (!d.proceed || d.block_id != w.block_id) {
      end_session(w, t);
      return;
    }
  }

  const auto& pg = task->paging;
  const bool all_gold = pg.first_page_all_gold && w.pages_in_block == 0;
  const int n_gold = all_gold ? pg.units_per_page : pg.gold_per_page;
  const int n_plain = all_gold ? 0 : pg.units_per_page - pg.gold_per_page;
  auto unseen = [&](std::size_t u) {
    return !w.seen.contains(w.block_id + "|" + task->units[u].id);
  };

  std::vector<std::size_t> chosen;
  std::vector<std::size_t> gold;
  std::copy_if(task->gold.begin(), task->gold.end(), std::back_inserter(gold), unseen);
  std::shuffle(gold.begin(), gold.end(), w.rng);
  for (int i = 0; i < n_gold && i < static_cast<int>(gold.size()); ++i) chosen.push_back(gold[i]);
  std::vector<std::size_t> plain;
  std::copy_if(task->plain.begin(), task->plain.end(), std::back_inserter(plain), unseen);
  std::stable_sort(plain.begin(), plain.end(),
                   [&](std::size_t a, std::size_t b) { return task->votes[a] < task->votes[b]; });
  for (int i = 0; i < n_plain && i < static_cast<int>(plain.size()); ++i) chosen.push_back(plain[i]);
  if (chosen.empty()) {
    end_session(w, t);
    return;
  }
  // Gold items are interleaved at a worker-specific position.
  std::shuffle(chosen.begin(), chosen.end(), w.rng);

  BehaviorContext ctx;
  ctx.to_group = w.group_id;
  ctx.to_kind = group_kinds_.contains(w.group_id) ? group_kinds_[w.group_id] : ConditionKind::unspecified;
  if (w.session_no == 1 && w.first_group && w.visited_blocks.size() > 1) {
    ctx.is_returning = true;
    ctx.from_group = *w.first_group;
    ctx.from_kind = group_kinds_.contains(*w.first_group) ? group_kinds_[*w.first_group]
                                                         : ConditionKind::unspecified;
  }

  w.page.clear();
  Timestamp at = t;
  for (std::size_t slot = 0; slot < chosen.size(); ++slot) {
    const auto& unit = task->units[chosen[slot]];
    const Behavior b = simulate_worker_behavior(profile_, w.rng, ctx);
    const std::string truth =
        unit.gold ? unit.gold->expected_answer : simulated_truth(unit.id, task->options);
    std::string answer = truth;
    if (!b.correct && task->options.size() > 1) {
      std::vector<std::string> wrong;
      for (const auto& o : task->options) {
        if (o != truth) wrong.push_back(o);
      }
      answer = wrong[std::uniform_int_distribution<std::size_t>(0, wrong.size() - 1)(w.rng)];
    }
    w.page.push_back({chosen[slot], answer, b.decision_time_s});
    at += Millis{ms_of(b.decision_time_s)};
    push(Pending{at, 0, SimEventKind::judgment_submitted, w.serial, w.session, slot, ""});
  }
}

void SimPlatform::on_judgment(Worker& w, const Pending& e) {
  Task* task = open_task(w.block_id);
  if (task == nullptr) {
    end_session(w, e.time);
    return;
  }
  const auto& item = w.page.at(e.unit_slot);
  const auto& unit = task->units[item.unit];
  w.seen.insert(w.block_id + "|" + unit.id);
  ++stats_.submitted;
  record(SimEventKind::judgment_submitted, e.time, w.serial, w.country, unit.id);
  const SubmitAck ack = gateway_->on_submit(Submission{w.block_id, w.pid, w.fp, w.canonical,
                                                       w.country, unit.id, item.answer,
                                                       item.decision_time_s, e.time});
  if (!ack.accepted) {
    end_session(w, e.time);
    return;
  }
  ++stats_.accepted;
  if (ack.judgment) {
    task->log.push_back(*ack.judgment);
    if (!unit.gold && ack.judgment->trusted) ++task->votes[item.unit];
  }
  if (e.unit_slot + 1 == w.page.size()) {
    --w.pages_left;
    ++w.pages_in_block;
    push(Pending{e.time + Millis{ms_of(profile_.page_gap_s)}, 0, SimEventKind::page_load, w.serial,
                 w.session, 0, ""});
  }
}

void SimPlatform::end_session(Worker& w, Timestamp t) {
  if (!w.in_session) return;
  w.in_session = false;
  ++w.session;
  w.page.clear();
  if (w.returner && w.session_no == 0) {
    w.session_no = 1;
    std::exponential_distribution<double> delay(1.0 / (profile_.return_delay_mean_hours * 3600.0));
    const Timestamp back = t + Millis{ms_of(std::max(60.0, delay(w.rng)))};
    push(Pending{back, 0, SimEventKind::worker_returns, w.serial, w.session, 0, ""});
  }
}

}  // namespace crowdctl::platform
