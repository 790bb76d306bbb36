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

#include "crowdctl/orchestrator/simulation.hpp"

#include <memory>
#include <optional>

#include "crowdctl/orchestrator/controller.hpp"
#include "crowdctl/workers/manager.hpp"

namespace crowdctl::orchestrator {

Timestamp default_sim_start() { return parse_utc("2026-03-02T00:00:00.000Z"); }

SimulationResult run_simulation(const SimulationConfig& cfg) {
  ManualClock clock(cfg.start);
  platform::PopulationProfile profile = cfg.profile;
  profile.seed = cfg.seed;
  auto sim = std::make_shared<platform::SimPlatform>(profile, clock, cfg.start);
  sim->set_trace_enabled(cfg.keep_trace);
  std::map<std::string, workflow::ConditionKind> kinds;
  for (const auto& g : cfg.def.groups) kinds[g.id] = g.kind;
  sim->set_group_kinds(kinds);
  platform::AdapterRegistry registry;
  registry.add(sim);

  SimulationResult out;
  std::int64_t visits = 0;
  auto hook = [&](std::string_view point) {
    ++visits;
    if (cfg.crash_at.contains(visits)) {
      out.crash_points.emplace_back(point);
      throw engine::SimulatedCrash(point);
    }
  };

  std::unique_ptr<store::Store> owned;
  if (!cfg.store) owned = std::make_unique<store::Store>(cfg.store_path);
  store::Store* st = cfg.store ? cfg.store : owned.get();
  std::unique_ptr<workers::WorkerManager> wm;
  std::unique_ptr<engine::Engine> eng;
  std::unique_ptr<RunController> ctl;
  auto build = [&] {
    wm = std::make_unique<workers::WorkerManager>(*st, clock);
    eng = std::make_unique<engine::Engine>(*st, registry, clock, wm.get());
    eng->set_fault_hook(hook);
  };
  build();

  engine::RunOptions options;
  options.adapter = "sim";
  options.seed = cfg.seed;
  options.toggles = cfg.toggles;
  out.run_id = eng->start_run(cfg.def, cfg.units, options).id;
  ctl = std::make_unique<RunController>(*st, *eng, *wm, clock, out.run_id);
  sim->set_gateway(ctl.get());

  // Process death: every in-memory object goes away; the store file and the
  // platform survive.
  auto restart = [&] {
    sim->set_gateway(nullptr);
    ctl.reset();
    eng.reset();
    wm.reset();
    if (owned && cfg.store_path != ":memory:") {
      owned.reset();
      owned = std::make_unique<store::Store>(cfg.store_path);
      st = owned.get();
    }
    build();
    eng->resume_run(out.run_id);
    ctl = std::make_unique<RunController>(*st, *eng, *wm, clock, out.run_id);
    sim->set_gateway(ctl.get());
  };

  std::optional<scheduler::Schedule> windows;
  if (cfg.def.schedule && cfg.toggles.schedule) windows = cfg.def.schedule;
  const Timestamp end = cfg.start + cfg.horizon;
  Timestamp t = cfg.start;
  for (;;) {
    bool finished = false;
    try {
      const auto cmds = ctl->tick(t);
      out.commands.insert(out.commands.end(), cmds.begin(), cmds.end());
      for (;;) {
        const auto o = eng->execute_next(out.run_id);
        if (o == engine::StepOutcome::run_complete || o == engine::StepOutcome::run_failed) {
          finished = true;
          break;
        }
        if (o != engine::StepOutcome::advanced) break;
      }
    } catch (const engine::SimulatedCrash&) {
      restart();
      continue;
    }
    if (finished || t >= end) break;
    Timestamp next = t + cfg.step;
    if (windows) {
      if (auto edge = scheduler::next_transition(*windows, t + Millis{1}, next)) {
        next = std::min(next, *edge);
      }
    }
    sim->advance_to(next);
    t = next;
  }

  sim->set_gateway(nullptr);
  out.status = st->get_run(out.run_id)->status;
  out.finished_at = clock.now();
  for (const auto& sj : st->judgments(out.run_id)) {
    out.judgments.push_back(platform::judgment_from_json(sj.body));
  }
  for (const auto& b : cfg.def.blocks) {
    if (!b.as_do()) continue;
    const auto& calls = sim->publish_calls();
    auto it = calls.find(engine::intent_token(out.run_id, b.id));
    out.publish_calls[b.id] = it == calls.end() ? 0 : it->second;
  }
  out.scheduler = ctl->state();
  out.group_assignments = wm->group_assignment_counts(out.run_id);
  out.stats = sim->stats();
  out.trace = sim->trace();
  out.fault_boundaries = visits;
  const auto integrity = st->integrity_check();
  out.integrity_ok = integrity.ok();
  out.integrity_problems = integrity.problems;
  return out;
}

}  // namespace crowdctl::orchestrator
