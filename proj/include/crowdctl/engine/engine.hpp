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
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/engine/transforms.hpp"
#include "crowdctl/platform/adapter.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workers/manager.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::engine {

// Experimental controls of a run. Off means observe only: decisions are
// still computed and recorded, but nobody is turned away.
struct Toggles {
  bool eligibility = true;
  bool quotas = true;
  bool schedule = true;

  bool operator==(const Toggles&) const = default;
};

Json to_json(const Toggles& t);
Toggles toggles_from_json(const Json& j);

struct RunOptions {
  std::string adapter;  // empty: each Do block's own platform
  std::uint64_t seed = 1;
  Toggles toggles;
  // Eligibility hook URL template; "{run}" is replaced by the run id.
  std::string hook_url = "/runs/{run}/eligibility";
};

enum class StepOutcome { advanced, waiting_on_platform, run_complete, blocked_by_schedule, run_failed };
std::string_view to_string(StepOutcome o);

// Idempotency token of a Do block's publish intent.
std::string intent_token(const std::string& run_id, const std::string& block_id);

// Thrown by a fault hook to simulate the process dying at a persistence
// boundary. The engine never catches it.
struct SimulatedCrash : std::runtime_error {
  explicit SimulatedCrash(std::string_view point)
      : std::runtime_error("simulated crash at " + std::string(point)) {}
};

// Called with a boundary name right after each durable write (and right
// before the external calls that follow one).
using FaultHook = std::function<void(std::string_view point)>;

struct BlockProgress {
  std::string block_id;
  store::BlockStatus status = store::BlockStatus::pending;
  int attempts = 0;
  std::int64_t judgments = 0;
  std::int64_t units_complete = 0;  // non-gold units with enough trusted votes
  std::int64_t units_total = 0;
  std::string last_error;
};

Json to_json(const BlockProgress& p);

// Crash-and-rerun executor. Every state transition is persisted before the
// external call it enables; a finished block's output is written once to the
// block cache and never recomputed. All mutation of one run goes through
// that run's mutex.
class Engine {
 public:
  Engine(store::Store& store, platform::AdapterRegistry& adapters, const Clock& clock,
         workers::WorkerManager* workers = nullptr,
         std::shared_ptr<TransformRegistry> transforms = nullptr);
  ~Engine();

  void set_fault_hook(FaultHook hook) { fault_ = std::move(hook); }
  void set_max_attempts(int n) { max_attempts_ = n; }
  void set_backoff(Millis first) { backoff_ = first; }
  TransformRegistry& transforms() { return *transforms_; }

  // Validates, stores the workflow version (if new) and the units, and
  // creates a running run with every block pending. No platform calls.
  // Throws ValidationFailed on an invalid definition or unit set.
  store::RunRecord start_run(const workflow::WorkflowDef& def,
                             const std::vector<workflow::DataUnit>& units,
                             const RunOptions& options);

  // Loads a persisted run from the store (after a crash or in a new
  // process). Cached blocks are never revisited; collecting blocks keep
  // their task handle and cursor. Throws definition-unavailable when the
  // workflow version is gone.
  store::RunRecord resume_run(const std::string& run_id);

  // One unit of progress on the first ready block that can make any.
  StepOutcome execute_next(const std::string& run_id);

  void pause_run(const std::string& run_id, const std::string& by);
  void continue_run(const std::string& run_id, const std::string& by);
  void cancel_run(const std::string& run_id);

  bool is_loaded(const std::string& run_id) const;
  const workflow::WorkflowDef& definition(const std::string& run_id) const;
  const std::vector<workflow::DataUnit>& units(const std::string& run_id) const;
  RunOptions options(const std::string& run_id) const;
  std::string hook_secret(const std::string& run_id) const;
  // Whether the Do block currently has a live task taking judgments.
  bool block_collecting(const std::string& run_id, const std::string& block_id);
  std::vector<BlockProgress> progress(const std::string& run_id);

 private:
  struct Slot;

  Slot& slot(const std::string& run_id) const;
  Slot& load(const std::string& run_id);
  void fault(std::string_view point);
  bool inputs_ready(const Slot& s, const std::string& block_id);
  Json block_input(const Slot& s, const std::string& block_id);
  std::vector<workflow::DataUnit> do_units(const Slot& s, const std::string& block_id);
  StepOutcome step_lambda(Slot& s, const workflow::BlockDef& b);
  StepOutcome step_do(Slot& s, const workflow::BlockDef& b, store::BlockRecord rec);
  StepOutcome publish(Slot& s, const workflow::BlockDef& b, store::BlockRecord rec);
  StepOutcome collect(Slot& s, const workflow::BlockDef& b, store::BlockRecord rec);
  void record_failure(Slot& s, store::BlockRecord& rec, const std::string& what);
  std::shared_ptr<platform::Adapter> adapter_for(const Slot& s, const workflow::DoBlock& d) const;
  bool do_complete(const Slot& s, const std::string& block_id) const;
  void finish_run(Slot& s, store::RunStatus status);

  store::Store& store_;
  platform::AdapterRegistry& adapters_;
  const Clock& clock_;
  workers::WorkerManager* workers_;
  std::shared_ptr<TransformRegistry> transforms_;
  FaultHook fault_;
  int max_attempts_ = 3;
  Millis backoff_{5000};

  mutable std::mutex slots_mu_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
};

}  // namespace crowdctl::engine
