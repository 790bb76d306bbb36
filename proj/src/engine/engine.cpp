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

#include "crowdctl/engine/engine.hpp"

#include <algorithm>

#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"
#include "crowdctl/common/violation.hpp"
#include "crowdctl/scheduler/schedule.hpp"
#include "crowdctl/workflow/codec.hpp"
#include "crowdctl/workflow/graph.hpp"

namespace crowdctl::engine {

using store::BlockRecord;
using store::BlockStatus;
using store::RunRecord;
using store::RunStatus;
using workflow::BlockDef;
using workflow::DataUnit;

Json to_json(const Toggles& t) {
  return Json{{"eligibility", t.eligibility}, {"quotas", t.quotas}, {"schedule", t.schedule}};
}

Toggles toggles_from_json(const Json& j) {
  ObjectReader r(j, "toggles");
  Toggles t;
  t.eligibility = r.value_or<bool>("eligibility", true);
  t.quotas = r.value_or<bool>("quotas", true);
  t.schedule = r.value_or<bool>("schedule", true);
  r.finish();
  return t;
}

std::string_view to_string(StepOutcome o) {
  switch (o) {
    case StepOutcome::advanced: return "advanced";
    case StepOutcome::waiting_on_platform: return "waiting-on-platform";
    case StepOutcome::run_complete: return "run-complete";
    case StepOutcome::blocked_by_schedule: return "blocked-by-schedule";
    case StepOutcome::run_failed: return "run-failed";
  }
  return "?";
}

Json to_json(const BlockProgress& p) {
  return Json{{"blockId", p.block_id},
              {"status", store::to_string(p.status)},
              {"attempts", p.attempts},
              {"judgments", p.judgments},
              {"unitsComplete", p.units_complete},
              {"unitsTotal", p.units_total},
              {"lastError", p.last_error}};
}

struct Engine::Slot {
  std::mutex mu;
  std::string run_id;
  workflow::WorkflowDef def;
  std::vector<std::string> order;
  std::vector<DataUnit> units;
  RunOptions options;
  std::string secret;
  std::set<std::string> cached;
  // Do block -> its published units (resolved once inputs are cached).
  std::map<std::string, std::vector<DataUnit>> block_units;
  // Do block -> unit -> judgments from trusted workers.
  std::map<std::string, std::map<std::string, std::int64_t>> votes;
  std::map<std::string, std::int64_t> judgment_counts;
};

namespace {

Json options_json(const RunOptions& o, const std::string& secret) {
  return Json{{"adapter", o.adapter},
              {"seed", o.seed},
              {"toggles", to_json(o.toggles)},
              {"hookUrl", o.hook_url},
              {"secret", secret}};
}

RunOptions options_from(const Json& config) {
  RunOptions o;
  o.adapter = config.value("adapter", "");
  o.seed = config.value<std::uint64_t>("seed", 1);
  if (config.contains("toggles")) o.toggles = toggles_from_json(config["toggles"]);
  o.hook_url = config.value("hookUrl", o.hook_url);
  return o;
}

std::string replace_all(std::string s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

}  // namespace

std::string intent_token(const std::string& run_id, const std::string& block_id) {
  return sha256_hex(run_id + "/" + block_id);
}

Engine::Engine(store::Store& store, platform::AdapterRegistry& adapters, const Clock& clock,
               workers::WorkerManager* workers, std::shared_ptr<TransformRegistry> transforms)
    : store_(store),
      adapters_(adapters),
      clock_(clock),
      workers_(workers),
      transforms_(transforms ? std::move(transforms) : std::make_shared<TransformRegistry>()) {}

Engine::~Engine() = default;

void Engine::fault(std::string_view point) {
  if (fault_) fault_(point);
}

RunRecord Engine::start_run(const workflow::WorkflowDef& input_def,
                            const std::vector<DataUnit>& units, const RunOptions& options) {
  workflow::WorkflowDef def = input_def;
  workflow::ensure_default_group(def);
  if (def.id.empty()) throw Error(errc::invalid_argument, "workflow id is empty");

  auto result = workflow::validate_workflow(def, workflow::unit_schema_of(units),
                                            transforms_->extra_ops());
  Violations violations = result.violations;
  if (result.ok()) {
    auto unit_violations = workflow::validate_units(def, units);
    violations.insert(violations.end(), unit_violations.begin(), unit_violations.end());
  }
  for (const auto& b : def.blocks) {
    const auto* d = b.as_do();
    if (!d) continue;
    const std::string adapter = options.adapter.empty() ? d->platform : options.adapter;
    if (!adapters_.contains(adapter)) {
      violations.push_back({"unknown-adapter", "no adapter registered as '" + adapter + "'", b.id});
    }
  }
  if (!violations.empty()) throw ValidationFailed(std::move(violations));

  // Deploy-time capability check: throws unsupported-element before any
  // record exists.
  for (const auto& b : def.blocks) {
    if (const auto* d = b.as_do()) {
      const std::string adapter = options.adapter.empty() ? d->platform : options.adapter;
      platform::translate_template(d->task, *adapters_.get(adapter), {"", ""});
    }
  }

  const Json body = workflow::to_json(def);
  const std::string secret = random_token_hex(32);
  RunRecord run;
  run.id = "run-" + random_token_hex(8);
  run.workflow_id = def.id;
  run.workflow_version = def.version;
  run.status = RunStatus::running;
  run.started_at = clock_.now();
  run.config = options_json(options, secret);

  store_.transact([&] {
    if (auto existing = store_.get_workflow(def.id, def.version)) {
      if (*existing != body) {
        throw Error(errc::conflict, "workflow " + def.id + " version " +
                                        std::to_string(def.version) +
                                        " already exists with different content");
      }
    } else {
      store_.put_workflow(def.id, def.version, body, clock_.now());
    }
    store_.create_run(run);
    store_.put_run_units(run.id, workflow::to_json(units));
    for (const auto& b : def.blocks) {
      BlockRecord rec;
      rec.block_id = b.id;
      store_.put_block(run.id, rec);
    }
    store_.append_audit(run.id, "run-started",
                        Json{{"workflowId", def.id},
                             {"version", def.version},
                             {"units", units.size()},
                             {"adapter", options.adapter},
                             {"seed", options.seed},
                             {"toggles", to_json(options.toggles)}},
                        clock_.now());
  });
  load(run.id);
  return run;
}

Engine::Slot& Engine::load(const std::string& run_id) {
  auto run = store_.get_run(run_id);
  if (!run) throw Error(errc::not_found, "unknown run " + run_id);
  auto body = store_.get_workflow(run->workflow_id, run->workflow_version);
  if (!body) {
    throw Error(errc::definition_unavailable,
                "definition unavailable: workflow " + run->workflow_id + " version " +
                    std::to_string(run->workflow_version));
  }
  auto s = std::make_unique<Slot>();
  s->run_id = run_id;
  s->def = workflow::workflow_from_json(*body);
  s->order = workflow::topological_order(s->def);
  s->units = workflow::units_from_json(store_.get_run_units(run_id).value_or(Json::array()));
  s->options = options_from(run->config);
  s->secret = run->config.value("secret", "");
  for (const auto& c : store_.cache_entries(run_id)) s->cached.insert(c.block_id);
  for (const auto& sj : store_.judgments(run_id)) {
    const auto j = platform::judgment_from_json(sj.body);
    ++s->judgment_counts[sj.block_id];
    if (j.trusted && !j.is_gold) ++s->votes[sj.block_id][j.unit_id];
  }

  if (workers_) {
    workers::RunContext c;
    c.run_id = run_id;
    c.policy = s->def.policy;
    c.quotas = s->def.quotas;
    for (const auto& g : s->def.groups) c.groups.push_back(g.id);
    for (const auto& b : s->def.blocks) {
      if (const auto* d = b.as_do()) c.blocks_by_group[d->group].push_back(b.id);
    }
    c.seed = s->options.seed;
    c.enforce_eligibility = s->options.toggles.eligibility;
    c.enforce_quotas = s->options.toggles.quotas;
    c.block_open = [this, run_id](const std::string& block) {
      return block_collecting(run_id, block);
    };
    workers_->register_run(std::move(c));
  }

  std::lock_guard lock(slots_mu_);
  auto& ref = slots_[run_id];
  ref = std::move(s);
  return *ref;
}

Engine::Slot& Engine::slot(const std::string& run_id) const {
  std::lock_guard lock(slots_mu_);
  auto it = slots_.find(run_id);
  if (it == slots_.end()) throw Error(errc::not_found, "run " + run_id + " is not loaded");
  return *it->second;
}

bool Engine::is_loaded(const std::string& run_id) const {
  std::lock_guard lock(slots_mu_);
  return slots_.contains(run_id);
}

RunRecord Engine::resume_run(const std::string& run_id) {
  Slot& s = load(run_id);
  auto run = store_.get_run(run_id);
  if (run->status != RunStatus::running && run->status != RunStatus::paused) return *run;
  store_.append_audit(run_id, "run-attached", Json{{"status", store::to_string(run->status)}},
                      clock_.now());
  // A crash between persisting a pause/resume and telling the platform
  // leaves live tasks out of step; bring them back in line.
  for (const auto& rec : store_.blocks(run_id)) {
    if (rec.status != BlockStatus::collecting || !rec.handle) continue;
    auto adapter = adapter_for(s, *s.def.find_block(rec.block_id)->as_do());
    const auto h = platform::task_handle_from_json(*rec.handle);
    if (run->status == RunStatus::paused) {
      adapter->pause(h);
    } else {
      adapter->resume(h);
    }
  }
  return *run;
}

const workflow::WorkflowDef& Engine::definition(const std::string& run_id) const {
  return slot(run_id).def;
}

const std::vector<DataUnit>& Engine::units(const std::string& run_id) const {
  return slot(run_id).units;
}

RunOptions Engine::options(const std::string& run_id) const { return slot(run_id).options; }

std::string Engine::hook_secret(const std::string& run_id) const { return slot(run_id).secret; }

bool Engine::block_collecting(const std::string& run_id, const std::string& block_id) {
  auto rec = store_.get_block(run_id, block_id);
  return rec && rec->status == BlockStatus::collecting;
}

bool Engine::inputs_ready(const Slot& s, const std::string& block_id) {
  for (const auto& p : s.def.parents_of(block_id)) {
    if (!s.cached.contains(p)) return false;
  }
  return true;
}

Json Engine::block_input(const Slot& s, const std::string& block_id) {
  const auto parents = s.def.parents_of(block_id);
  if (parents.empty()) return workflow::to_json(s.units);
  // Fan-in: parent outputs concatenated in edge-declaration order.
  Json input = Json::array();
  for (const auto& p : parents) {
    auto entry = store_.get_cache(s.run_id, p);
    if (!entry) throw Error(errc::invalid_state, "parent " + p + " of " + block_id + " not cached");
    for (const auto& el : entry->output) input.push_back(el);
  }
  return input;
}

std::vector<DataUnit> Engine::do_units(const Slot& s, const std::string& block_id) {
  const Json input = block_input(s, block_id);
  try {
    return workflow::units_from_json(input);
  } catch (const Error& e) {
    throw Error(errc::invalid_argument,
                "input of Do block " + block_id + " is not a list of data units: " + e.what());
  }
}

std::shared_ptr<platform::Adapter> Engine::adapter_for(const Slot& s,
                                                       const workflow::DoBlock& d) const {
  return adapters_.get(s.options.adapter.empty() ? d.platform : s.options.adapter);
}

bool Engine::do_complete(const Slot& s, const std::string& block_id) const {
  const auto& units = s.block_units.at(block_id);
  const auto* d = s.def.find_block(block_id)->as_do();
  const bool any_plain = std::any_of(units.begin(), units.end(),
                                     [](const DataUnit& u) { return !u.gold; });
  auto vit = s.votes.find(block_id);
  for (const auto& u : units) {
    if (any_plain && u.gold) continue;
    std::int64_t n = 0;
    if (vit != s.votes.end()) {
      if (auto it = vit->second.find(u.id); it != vit->second.end()) n = it->second;
    }
    if (n < d->votes_per_unit) return false;
  }
  return true;
}

void Engine::finish_run(Slot& s, RunStatus status) {
  store_.transact([&] {
    auto run = *store_.get_run(s.run_id);
    run.status = status;
    run.finished_at = clock_.now();
    store_.update_run(run);
    store_.append_audit(s.run_id, status == RunStatus::completed ? "run-completed" : "run-failed",
                        Json::object(), clock_.now());
  });
  fault("run:after-finish");
}

StepOutcome Engine::execute_next(const std::string& run_id) {
  if (!is_loaded(run_id)) load(run_id);
  Slot& s = slot(run_id);
  std::lock_guard lock(s.mu);

  auto run = store_.get_run(run_id);
  switch (run->status) {
    case RunStatus::completed: return StepOutcome::run_complete;
    case RunStatus::failed: return StepOutcome::run_failed;
    case RunStatus::cancelled: throw Error(errc::invalid_state, "run " + run_id + " is cancelled");
    case RunStatus::paused: return StepOutcome::blocked_by_schedule;
    case RunStatus::created:
      run->status = RunStatus::running;
      run->started_at = clock_.now();
      store_.update_run(*run);
      break;
    case RunStatus::running: break;
  }
  if (s.options.toggles.schedule && s.def.schedule &&
      !scheduler::is_active(*s.def.schedule, clock_.now())) {
    return StepOutcome::blocked_by_schedule;
  }

  bool all_cached = true;
  bool any_waiting = false;
  bool any_failed = false;
  for (const auto& id : s.order) {
    if (s.cached.contains(id)) continue;
    all_cached = false;
    auto rec = store_.get_block(run_id, id);
    if (!rec) throw Error(errc::invalid_state, "missing block record " + id);
    if (rec->status == BlockStatus::failed) {
      any_failed = true;
      continue;
    }
    if (!inputs_ready(s, id)) continue;
    const BlockDef& b = *s.def.find_block(id);
    if (b.kind() == workflow::BlockKind::lambda) return step_lambda(s, b);
    const StepOutcome o = step_do(s, b, *rec);
    if (o == StepOutcome::advanced) return o;
    any_waiting = true;
  }
  if (all_cached) {
    finish_run(s, RunStatus::completed);
    return StepOutcome::run_complete;
  }
  if (!any_waiting && any_failed) {
    finish_run(s, RunStatus::failed);
    return StepOutcome::run_failed;
  }
  return StepOutcome::waiting_on_platform;
}

StepOutcome Engine::step_lambda(Slot& s, const BlockDef& b) {
  BlockRecord rec = *store_.get_block(s.run_id, b.id);
  if (rec.status != BlockStatus::transforming) {
    rec.status = BlockStatus::transforming;
    store_.put_block(s.run_id, rec);
    fault("lambda:after-transforming");
  }
  Json output;
  try {
    output = transforms_->eval(b.as_lambda()->transform, block_input(s, b.id));
  } catch (const Error& e) {
    // A transform error is deterministic; retrying cannot help.
    rec.attempts = max_attempts_ - 1;
    record_failure(s, rec, e.what());
    return StepOutcome::advanced;
  }
  store_.transact([&] {
    const auto r = store_.put_once(s.run_id, b.id, output, clock_.now());
    rec.status = BlockStatus::done;
    store_.put_block(s.run_id, rec);
    store_.append_audit(s.run_id, "block-completed",
                        Json{{"blockId", b.id}, {"digest", r.digest}, {"items", output.size()}},
                        clock_.now());
  });
  s.cached.insert(b.id);
  fault("lambda:after-cache");
  return StepOutcome::advanced;
}

StepOutcome Engine::step_do(Slot& s, const BlockDef& b, BlockRecord rec) {
  if (rec.retry_at && clock_.now() < *rec.retry_at) return StepOutcome::waiting_on_platform;
  if (!s.block_units.contains(b.id)) s.block_units[b.id] = do_units(s, b.id);
  switch (rec.status) {
    case BlockStatus::pending:
      rec.intent_token = intent_token(s.run_id, b.id);
      rec.status = BlockStatus::publishing;
      store_.put_block(s.run_id, rec);
      fault("do:after-intent");
      return publish(s, b, std::move(rec));
    case BlockStatus::publishing:
      return publish(s, b, std::move(rec));
    case BlockStatus::collecting:
      return collect(s, b, std::move(rec));
    case BlockStatus::transforming:
    case BlockStatus::done:
    case BlockStatus::failed:
      break;
  }
  return StepOutcome::waiting_on_platform;
}

void Engine::record_failure(Slot& s, BlockRecord& rec, const std::string& what) {
  ++rec.attempts;
  rec.last_error = what;
  const bool parked = rec.attempts >= max_attempts_;
  if (parked) {
    rec.status = BlockStatus::failed;
    rec.retry_at.reset();
  } else {
    rec.retry_at = clock_.now() + backoff_ * (std::int64_t{1} << (rec.attempts - 1));
  }
  store_.transact([&] {
    store_.put_block(s.run_id, rec);
    store_.append_audit(s.run_id, parked ? "block-failed" : "block-retry",
                        Json{{"blockId", rec.block_id}, {"attempts", rec.attempts}, {"error", what}},
                        clock_.now());
  });
  fault("do:after-failure");
}

StepOutcome Engine::publish(Slot& s, const BlockDef& b, BlockRecord rec) {
  const auto& d = *b.as_do();
  std::optional<platform::TaskHandle> handle;
  try {
    auto adapter = adapter_for(s, d);
    handle = adapter->lookup(*rec.intent_token);
    if (!handle) {
      const std::string url = replace_all(s.options.hook_url, "{run}", s.run_id);
      Json payload = platform::translate_template(
          d.task, *adapter, {url, platform::hook_token(s.secret, s.run_id)});
      payload["runId"] = s.run_id;
      payload["blockId"] = b.id;
      payload["groupId"] = d.group;
      payload["votesPerUnit"] = d.votes_per_unit;
      payload["rewardMinor"] = d.reward_minor;
      handle = adapter->publish(payload, s.block_units.at(b.id), *rec.intent_token);
    }
  } catch (const SimulatedCrash&) {
    throw;
  } catch (const std::exception& e) {
    record_failure(s, rec, e.what());
    return StepOutcome::advanced;
  }
  fault("do:after-publish");
  rec.handle = platform::to_json(*handle);
  rec.status = BlockStatus::collecting;
  rec.retry_at.reset();
  store_.transact([&] {
    store_.put_block(s.run_id, rec);
    store_.append_audit(s.run_id, "task-published",
                        Json{{"blockId", b.id}, {"handle", *rec.handle}}, clock_.now());
  });
  fault("do:after-handle");
  return StepOutcome::advanced;
}

StepOutcome Engine::collect(Slot& s, const BlockDef& b, BlockRecord rec) {
  const auto handle = platform::task_handle_from_json(*rec.handle);
  auto adapter = adapter_for(s, *b.as_do());
  platform::FetchResult fr;
  try {
    fr = adapter->fetch_judgments(handle, rec.cursor);
  } catch (const SimulatedCrash&) {
    throw;
  } catch (const std::exception& e) {
    record_failure(s, rec, e.what());
    return StepOutcome::advanced;
  }

  std::map<std::string, const DataUnit*> by_id;
  for (const auto& u : s.block_units.at(b.id)) by_id[u.id] = &u;

  std::int64_t ingested = 0;
  std::map<std::string, std::int64_t> new_votes;
  if (!fr.judgments.empty() || fr.next_cursor != rec.cursor) {
    store_.transact([&] {
      for (auto j : fr.judgments) {
        j.block_id = b.id;
        auto unit = by_id.find(j.unit_id);
        if (unit == by_id.end()) {
          store_.append_audit(s.run_id, "unknown-unit",
                              Json{{"blockId", b.id}, {"unitId", j.unit_id}}, clock_.now());
          continue;
        }
        if (j.canonical_worker_id.empty() && workers_) {
          // Raw platform judgment: attribute it through the worker manager.
          j.is_gold = unit->second->gold.has_value();
          j.gold_correct.reset();
          if (j.is_gold) j.gold_correct = j.answer == unit->second->gold->expected_answer;
          if (j.country.empty()) j.country = adapter->worker_country(j.platform_worker_id).value_or("");
          try {
            const auto cid =
                workers_->resolve_identity(j.platform_worker_id, j.fingerprint, s.run_id);
            j = workers_->record_judgment(s.run_id, cid, std::move(j));
          } catch (const Error& e) {
            if (e.code() != errc::protocol_violation) throw;
            continue;
          }
        }
        store_.append_judgment(s.run_id, b.id, platform::to_json(j));
        ++ingested;
        if (j.trusted && !j.is_gold) ++new_votes[j.unit_id];
      }
      rec.cursor = fr.next_cursor;
      store_.put_block(s.run_id, rec);
    });
    s.judgment_counts[b.id] += ingested;
    for (const auto& [unit, n] : new_votes) s.votes[b.id][unit] += n;
    fault("do:after-ingest");
  }

  if (!do_complete(s, b.id)) {
    return ingested > 0 ? StepOutcome::advanced : StepOutcome::waiting_on_platform;
  }
  try {
    adapter->cancel(handle);
  } catch (const SimulatedCrash&) {
    throw;
  } catch (const std::exception& e) {
    record_failure(s, rec, e.what());
    return StepOutcome::advanced;
  }
  fault("do:after-cancel");
  Json output = Json::array();
  for (const auto& sj : store_.block_judgments(s.run_id, b.id)) output.push_back(sj.body);
  store_.transact([&] {
    const auto r = store_.put_once(s.run_id, b.id, output, clock_.now());
    rec.status = BlockStatus::done;
    store_.put_block(s.run_id, rec);
    store_.append_audit(s.run_id, "block-completed",
                        Json{{"blockId", b.id}, {"digest", r.digest}, {"items", output.size()}},
                        clock_.now());
  });
  s.cached.insert(b.id);
  fault("do:after-cache");
  return StepOutcome::advanced;
}

void Engine::pause_run(const std::string& run_id, const std::string& by) {
  if (!is_loaded(run_id)) load(run_id);
  Slot& s = slot(run_id);
  std::lock_guard lock(s.mu);
  auto run = *store_.get_run(run_id);
  if (run.status != RunStatus::running) return;
  run.status = RunStatus::paused;
  store_.transact([&] {
    store_.update_run(run);
    store_.append_audit(run_id, "run-paused", Json{{"by", by}}, clock_.now());
  });
  fault("run:after-pause");
  for (const auto& rec : store_.blocks(run_id)) {
    if (rec.status != BlockStatus::collecting || !rec.handle) continue;
    const auto* d = s.def.find_block(rec.block_id)->as_do();
    adapter_for(s, *d)->pause(platform::task_handle_from_json(*rec.handle));
  }
}

void Engine::continue_run(const std::string& run_id, const std::string& by) {
  if (!is_loaded(run_id)) load(run_id);
  Slot& s = slot(run_id);
  std::lock_guard lock(s.mu);
  auto run = *store_.get_run(run_id);
  if (run.status != RunStatus::paused) return;
  run.status = RunStatus::running;
  store_.transact([&] {
    store_.update_run(run);
    store_.append_audit(run_id, "run-resumed", Json{{"by", by}}, clock_.now());
  });
  fault("run:after-resume");
  for (const auto& rec : store_.blocks(run_id)) {
    if (rec.status != BlockStatus::collecting || !rec.handle) continue;
    const auto* d = s.def.find_block(rec.block_id)->as_do();
    adapter_for(s, *d)->resume(platform::task_handle_from_json(*rec.handle));
  }
}

void Engine::cancel_run(const std::string& run_id) {
  if (!is_loaded(run_id)) load(run_id);
  Slot& s = slot(run_id);
  std::lock_guard lock(s.mu);
  auto run = *store_.get_run(run_id);
  if (run.status == RunStatus::completed || run.status == RunStatus::cancelled ||
      run.status == RunStatus::failed) {
    return;
  }
  run.status = RunStatus::cancelled;
  run.finished_at = clock_.now();
  store_.transact([&] {
    store_.update_run(run);
    store_.append_audit(run_id, "run-cancelled", Json::object(), clock_.now());
  });
  for (const auto& rec : store_.blocks(run_id)) {
    if (!rec.handle || rec.status == BlockStatus::done) continue;
    const auto* d = s.def.find_block(rec.block_id)->as_do();
    adapter_for(s, *d)->cancel(platform::task_handle_from_json(*rec.handle));
  }
}

std::vector<BlockProgress> Engine::progress(const std::string& run_id) {
  if (!is_loaded(run_id)) load(run_id);
  Slot& s = slot(run_id);
  std::lock_guard lock(s.mu);
  std::vector<BlockProgress> out;
  for (const auto& id : s.order) {
    auto rec = store_.get_block(run_id, id);
    BlockProgress p;
    p.block_id = id;
    p.status = rec->status;
    p.attempts = rec->attempts;
    p.last_error = rec->last_error;
    if (const auto* d = s.def.find_block(id)->as_do()) {
      p.judgments = s.judgment_counts[id];
      if (auto it = s.block_units.find(id); it != s.block_units.end()) {
        const bool any_plain = std::any_of(it->second.begin(), it->second.end(),
                                           [](const DataUnit& u) { return !u.gold; });
        for (const auto& u : it->second) {
          if (any_plain && u.gold) continue;
          ++p.units_total;
          if (s.votes[id][u.id] >= d->votes_per_unit) ++p.units_complete;
        }
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace crowdctl::engine
