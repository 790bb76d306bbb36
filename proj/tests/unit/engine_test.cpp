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

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <memory>
#include <random>

#include "crowdctl/common/error.hpp"
#include "crowdctl/engine/engine.hpp"
#include "crowdctl/engine/transforms.hpp"
#include "crowdctl/orchestrator/workloads.hpp"
#include "crowdctl/workflow/codec.hpp"
#include "support.hpp"

using namespace crowdctl;
using namespace crowdctl::engine;
using store::Store;

namespace {

const Timestamp kT0 = fixture::at_utc("2026-03-02T10:00:00.000Z");

// Platform stand-in that fills every published task with the requested
// votes on the first fetch. Its task table outlives engines and stores, like
// a real platform does across an orchestrator crash.
class ScriptedAdapter final : public platform::Adapter {
 public:
  std::string id() const override { return "script"; }
  std::set<workflow::UiKind> capabilities() const override { return platform::all_ui_kinds(); }

  std::optional<platform::TaskHandle> lookup(const std::string& token) override {
    auto it = tasks_.find(token);
    if (it == tasks_.end()) return std::nullopt;
    return it->second.handle;
  }
  platform::TaskHandle publish(const Json& payload, const std::vector<workflow::DataUnit>& units,
                               const std::string& token) override {
    ++publish_calls[token];
    if (fail_next > 0) {
      --fail_next;
      throw Error(errc::adapter_failure, "scripted publish failure");
    }
    auto& t = tasks_[token];
    t.handle = platform::TaskHandle{id(), "task-" + token, kT0};
    t.units = units;
    t.votes = payload.at("votesPerUnit").get<int>();
    by_task_[t.handle.platform_task_id] = token;
    return t.handle;
  }
  platform::Progress status(const platform::TaskHandle&) override { return {}; }
  void pause(const platform::TaskHandle&) override {}
  void resume(const platform::TaskHandle&) override {}
  platform::FetchResult fetch_judgments(const platform::TaskHandle& h, const std::string& cursor) override {
    const auto& t = tasks_.at(by_task_.at(h.platform_task_id));
    std::vector<platform::Judgment> log;
    for (const auto& u : t.units) {
      if (u.gold) continue;
      for (int v = 0; v < t.votes; ++v) {
        platform::Judgment j;
        j.unit_id = u.id;
        j.canonical_worker_id = "w" + std::to_string(v);
        j.platform_worker_id = "p" + std::to_string(v);
        j.answer = (std::hash<std::string>{}(u.id) + static_cast<std::size_t>(v)) % 3 == 0 ? "out" : "in";
        j.decision_time_s = 10.0 + v;
        j.submitted_at = kT0;
        log.push_back(j);
      }
    }
    const std::size_t from = cursor.empty() ? 0 : std::stoull(cursor);
    platform::FetchResult r;
    if (from < log.size()) r.judgments.assign(log.begin() + static_cast<std::ptrdiff_t>(from), log.end());
    r.next_cursor = std::to_string(log.size());
    return r;
  }
  void cancel(const platform::TaskHandle&) override {}
  std::optional<std::string> worker_country(const std::string&) override { return std::nullopt; }

  std::map<std::string, int> publish_calls;
  int fail_next = 0;

 private:
  struct Task {
    platform::TaskHandle handle;
    std::vector<workflow::DataUnit> units;
    int votes = 1;
  };
  std::map<std::string, Task> tasks_;
  std::map<std::string, std::string> by_task_;
};

struct Rig {
  explicit Rig(const std::string& path = ":memory:") : store(path) { registry.add(adapter); }
  Rig(const std::string& path, std::shared_ptr<ScriptedAdapter> shared)
      : store(path), adapter(std::move(shared)) {
    registry.add(adapter);
  }

  Store store;
  std::shared_ptr<ScriptedAdapter> adapter = std::make_shared<ScriptedAdapter>();
  platform::AdapterRegistry registry;
  ManualClock clock{kT0};
  Engine engine{store, registry, clock};
};

RunOptions script_options() {
  RunOptions o;
  o.adapter = "script";
  return o;
}

StepOutcome drive(Engine& e, const std::string& run_id, int max_steps = 500) {
  StepOutcome o = StepOutcome::advanced;
  for (int i = 0; i < max_steps && o == StepOutcome::advanced; ++i) o = e.execute_next(run_id);
  return o;
}

std::map<std::string, std::string> cache_digests(Store& s, const std::string& run_id) {
  std::map<std::string, std::string> out;
  for (const auto& c : s.cache_entries(run_id)) out[c.block_id] = c.digest;
  return out;
}

std::filesystem::path temp_db(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "crowdctl-engine-test";
  std::filesystem::create_directories(dir);
  auto p = dir / (name + "-" + std::to_string(::getpid()) + ".db");
  for (const auto* suffix : {"", "-wal", "-shm"}) std::filesystem::remove(p.string() + suffix);
  return p;
}

Json units_json(std::initializer_list<std::pair<const char*, const char*>> rows) {
  Json out = Json::array();
  for (const auto& [unit, answer] : rows) out.push_back(Json{{"unitId", unit}, {"answer", answer}});
  return out;
}

}  // namespace

TEST(StartRun, CreatesRunWithEveryBlockPending) {
  Rig r;
  const auto run = r.engine.start_run(fixture::chain_def(), fixture::units(3, 1), script_options());
  EXPECT_EQ(run.status, store::RunStatus::running);
  const auto blocks = r.store.blocks(run.id);
  ASSERT_EQ(blocks.size(), 2u);
  for (const auto& b : blocks) EXPECT_EQ(b.status, store::BlockStatus::pending);
  EXPECT_TRUE(r.adapter->publish_calls.empty());
}

TEST(StartRun, InvalidDefinitionCreatesNoRun) {
  Rig r;
  auto def = fixture::chain_def();
  def.edges.push_back({"B", "A"});
  EXPECT_THROW(r.engine.start_run(def, fixture::units(3), script_options()), ValidationFailed);
  EXPECT_TRUE(r.store.list_runs().empty());
}

TEST(StartRun, UnknownAdapterIsAViolation) {
  Rig r;
  auto o = script_options();
  o.adapter = "mturk";
  try {
    r.engine.start_run(fixture::chain_def(), fixture::units(3), o);
    FAIL() << "expected validation failure";
  } catch (const ValidationFailed& e) {
    EXPECT_EQ(e.violations().front().code, "unknown-adapter");
  }
}

TEST(StartRun, EveryRunGetsAFreshId) {
  Rig r;
  const auto a = r.engine.start_run(fixture::chain_def(), fixture::units(3), script_options());
  const auto b = r.engine.start_run(fixture::chain_def(), fixture::units(3), script_options());
  EXPECT_NE(a.id, b.id);
}

TEST(ExecuteNext, ChainRunsToCompletion) {
  Rig r;
  const auto run = r.engine.start_run(fixture::chain_def(), fixture::units(4, 1), script_options());
  EXPECT_EQ(drive(r.engine, run.id), StepOutcome::run_complete);
  EXPECT_EQ(r.store.get_run(run.id)->status, store::RunStatus::completed);
  const auto out = r.store.get_cache(run.id, "B");
  ASSERT_TRUE(out);
  EXPECT_EQ(out->output.size(), 4u);
  EXPECT_EQ(r.engine.execute_next(run.id), StepOutcome::run_complete);
}

TEST(ExecuteNext, SameInputsSameCacheDigests) {
  Rig a, b;
  const auto w = orchestrator::crash_workload();
  const auto ra = a.engine.start_run(w.def, w.units, script_options());
  const auto rb = b.engine.start_run(w.def, w.units, script_options());
  ASSERT_EQ(drive(a.engine, ra.id), StepOutcome::run_complete);
  ASSERT_EQ(drive(b.engine, rb.id), StepOutcome::run_complete);
  EXPECT_EQ(cache_digests(a.store, ra.id), cache_digests(b.store, rb.id));
}

TEST(ExecuteNext, OutsideTheScheduleIsBlocked) {
  Rig r;
  auto def = fixture::chain_def();
  scheduler::Schedule s;
  s.windows = {scheduler::TimeWindow{{}, 20, 22}};
  def.schedule = s;
  const auto run = r.engine.start_run(def, fixture::units(3), script_options());
  EXPECT_EQ(r.engine.execute_next(run.id), StepOutcome::blocked_by_schedule);
  r.clock.set(fixture::at_utc("2026-03-02T21:00:00.000Z"));
  EXPECT_EQ(r.engine.execute_next(run.id), StepOutcome::advanced);
}

TEST(ExecuteNext, ScheduleToggleOffIgnoresWindows) {
  Rig r;
  auto def = fixture::chain_def();
  scheduler::Schedule s;
  s.windows = {scheduler::TimeWindow{{}, 20, 22}};
  def.schedule = s;
  auto o = script_options();
  o.toggles.schedule = false;
  const auto run = r.engine.start_run(def, fixture::units(3), o);
  EXPECT_EQ(drive(r.engine, run.id), StepOutcome::run_complete);
}

TEST(ExecuteNext, PublishFailuresRetryWithBackoff) {
  Rig r;
  r.engine.set_backoff(Millis{1000});
  r.adapter->fail_next = 1;
  const auto run = r.engine.start_run(fixture::chain_def(), fixture::units(3), script_options());
  EXPECT_EQ(r.engine.execute_next(run.id), StepOutcome::advanced);  // failed attempt
  EXPECT_EQ(r.engine.execute_next(run.id), StepOutcome::waiting_on_platform);
  r.clock.advance(Millis{1000});
  EXPECT_EQ(drive(r.engine, run.id), StepOutcome::run_complete);
}

TEST(ExecuteNext, ExhaustedAttemptsFailTheRun) {
  Rig r;
  r.engine.set_backoff(Millis{0});
  r.engine.set_max_attempts(2);
  r.adapter->fail_next = 5;
  const auto run = r.engine.start_run(fixture::chain_def(), fixture::units(3), script_options());
  EXPECT_EQ(drive(r.engine, run.id), StepOutcome::run_failed);
  EXPECT_EQ(r.store.get_run(run.id)->status, store::RunStatus::failed);
}

TEST(PauseResume, PausedRunDoesNotAdvance) {
  Rig r;
  const auto run = r.engine.start_run(fixture::chain_def(), fixture::units(3), script_options());
  r.engine.pause_run(run.id, "user");
  EXPECT_EQ(r.engine.execute_next(run.id), StepOutcome::blocked_by_schedule);
  r.engine.continue_run(run.id, "user");
  EXPECT_EQ(drive(r.engine, run.id), StepOutcome::run_complete);
}

TEST(Cancel, CancelledRunRejectsSteps) {
  Rig r;
  const auto run = r.engine.start_run(fixture::chain_def(), fixture::units(3), script_options());
  r.engine.cancel_run(run.id);
  EXPECT_THROW(r.engine.execute_next(run.id), Error);
}

TEST(Resume, CompletedRunStaysCompleted) {
  const auto path = temp_db("resume-complete");
  std::string run_id;
  std::map<std::string, std::string> digests;
  {
    Rig r(path.string());
    run_id = r.engine.start_run(fixture::chain_def(), fixture::units(3), script_options()).id;
    ASSERT_EQ(drive(r.engine, run_id), StepOutcome::run_complete);
    digests = cache_digests(r.store, run_id);
  }
  Rig again(path.string());
  EXPECT_EQ(again.engine.resume_run(run_id).status, store::RunStatus::completed);
  EXPECT_EQ(again.engine.execute_next(run_id), StepOutcome::run_complete);
  EXPECT_EQ(cache_digests(again.store, run_id), digests);
  EXPECT_TRUE(again.adapter->publish_calls.empty());
}

TEST(Resume, MissingDefinitionIsReported) {
  Rig r;
  store::RunRecord run;
  run.id = "orphan";
  run.workflow_id = "gone";
  run.workflow_version = 1;
  run.status = store::RunStatus::running;
  run.started_at = kT0;
  r.store.create_run(run);
  try {
    r.engine.resume_run("orphan");
    FAIL() << "expected definition-unavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::definition_unavailable);
  }
}

TEST(Resume, CrashAtEveryBoundaryRecoversTheCleanResult) {
  const auto w = orchestrator::crash_workload();
  std::map<std::string, std::string> clean;
  int boundaries = 0;
  {
    Rig r;
    r.engine.set_fault_hook([&](std::string_view) { ++boundaries; });
    const auto run = r.engine.start_run(w.def, w.units, script_options());
    ASSERT_EQ(drive(r.engine, run.id), StepOutcome::run_complete);
    clean = cache_digests(r.store, run.id);
  }
  ASSERT_GT(boundaries, 20);

  for (int crash_at = 1; crash_at <= boundaries; ++crash_at) {
    const auto path = temp_db("crash");
    auto platform = std::make_shared<ScriptedAdapter>();
    std::string run_id;
    {
      Rig r(path.string(), platform);
      int seen = 0;
      r.engine.set_fault_hook([&](std::string_view point) {
        if (++seen == crash_at) throw SimulatedCrash(point);
      });
      run_id = r.engine.start_run(w.def, w.units, script_options()).id;
      EXPECT_THROW(drive(r.engine, run_id), SimulatedCrash) << "boundary " << crash_at;
    }
    Rig r(path.string(), platform);
    r.engine.resume_run(run_id);
    ASSERT_EQ(drive(r.engine, run_id), StepOutcome::run_complete) << "boundary " << crash_at;
    EXPECT_EQ(cache_digests(r.store, run_id), clean) << "boundary " << crash_at;
    for (const auto& [token, n] : platform->publish_calls) EXPECT_EQ(n, 1) << token << " at " << crash_at;
    EXPECT_TRUE(r.store.integrity_check().ok());
  }
}

TEST(Progress, ReportsEveryBlock) {
  Rig r;
  const auto run = r.engine.start_run(fixture::chain_def(), fixture::units(3, 1), script_options());
  drive(r.engine, run.id);
  const auto p = r.engine.progress(run.id);
  ASSERT_EQ(p.size(), 2u);
  for (const auto& b : p) EXPECT_EQ(b.status, store::BlockStatus::done);
}

TEST(Majority, ClearWinner) {
  const auto out = aggregate_majority_op(
      Json::object(), units_json({{"u1", "in"}, {"u1", "in"}, {"u1", "out"}}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0]["answer"], "in");
  EXPECT_EQ(out[0]["votes"], 2);
  EXPECT_EQ(out[0]["tie"], false);
}

TEST(Majority, TieBreaksLexicographicallyAndIsFlagged) {
  const auto out = aggregate_majority_op(Json::object(), units_json({{"u1", "out"}, {"u1", "in"}}));
  EXPECT_EQ(out[0]["answer"], "in");
  EXPECT_EQ(out[0]["tie"], true);
}

TEST(Majority, InvalidVotesAreSkipped) {
  Json in = units_json({{"u1", "out"}, {"u1", "in"}, {"u1", "in"}});
  in[1]["valid"] = false;
  in[2]["valid"] = false;
  EXPECT_EQ(aggregate_majority_op(Json::object(), in)[0]["answer"], "out");
  EXPECT_EQ(aggregate_majority_op(Json{{"validOnly", false}}, in)[0]["answer"], "in");
}

TEST(Majority, UnitsKeepFirstSeenOrder) {
  const auto out = aggregate_majority_op(Json::object(), units_json({{"u2", "in"}, {"u1", "in"}, {"u2", "out"}}));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0]["unitId"], "u2");
  EXPECT_EQ(out[1]["unitId"], "u1");
}

TEST(Transforms, PartitionKeepsInputOrder) {
  Json in = Json::array();
  for (int i = 0; i < 6; ++i) {
    in.push_back(Json{{"id", "u" + std::to_string(i)}, {"payload", {{"size", i % 2 ? "long" : "short"}}}});
  }
  const auto shorts = partition_op(Json{{"field", "size"}, {"key", "short"}}, in);
  ASSERT_EQ(shorts.size(), 3u);
  EXPECT_EQ(shorts[0]["id"], "u0");
  EXPECT_EQ(shorts[1]["id"], "u2");
  EXPECT_EQ(shorts[2]["id"], "u4");
  const auto all = partition_op(Json{{"field", "size"}}, in);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0]["key"], "long");
}

TEST(Transforms, FilterAndMapField) {
  Json in = units_json({{"u1", "in"}, {"u2", "out"}});
  const auto kept = filter_op(Json{{"field", "answer"}, {"value", "in"}}, in);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0]["unitId"], "u1");
  const auto mapped = map_field_op(Json{{"from", "answer"}, {"to", "label"}}, in);
  EXPECT_EQ(mapped[1]["label"], "out");
  EXPECT_THROW(filter_op(Json{{"field", "nope"}, {"value", 1}}, in), Error);
}

TEST(Transforms, SampleIsDeterministicPerSeedProperty) {
  Json in = Json::array();
  for (int i = 0; i < 40; ++i) in.push_back(Json{{"unitId", "u" + std::to_string(i)}});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<int>(rng() % 45);
    const auto seed = static_cast<std::int64_t>(rng() % 1000);
    const Json params{{"n", n}, {"seed", seed}};
    const auto a = sample_op(params, in);
    EXPECT_EQ(a, sample_op(params, in));
    EXPECT_EQ(a.size(), static_cast<std::size_t>(std::min(n, 40)));
    // Sampled elements stay in input order.
    int last = -1;
    for (const auto& el : a) {
      const int idx = std::stoi(el["unitId"].get<std::string>().substr(1));
      EXPECT_GT(idx, last);
      last = idx;
    }
  }
}

TEST(Transforms, ConcatIsIdentityOnItsInput) {
  const Json in = units_json({{"u1", "in"}, {"u2", "out"}});
  EXPECT_EQ(concat_op(Json::object(), in), in);
}

TEST(Transforms, RegistryRejectsShadowingBuiltIns) {
  TransformRegistry reg;
  EXPECT_THROW(reg.add("concat", concat_op), Error);
  reg.add("reverse", [](const Json&, const Json& in) {
    Json out = Json::array();
    for (auto it = in.rbegin(); it != in.rend(); ++it) out.push_back(*it);
    return out;
  });
  EXPECT_TRUE(reg.contains("reverse"));
  EXPECT_EQ(reg.extra_ops(), std::set<std::string>{"reverse"});
  EXPECT_THROW(reg.eval(workflow::TransformSpec{"nope", Json::object()}, Json::array()), Error);
}
