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
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/platform/judgment.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workers/policy.hpp"
#include "crowdctl/workers/quota.hpp"

namespace crowdctl::workers {

struct Participation {
  std::string run_id;
  std::string group_id;
  std::string block_id;
  Timestamp at;

  bool operator==(const Participation&) const = default;
};

struct WorkerRecord {
  std::string canonical_id;
  std::string country;
  Timestamp first_seen;
  Timestamp last_seen;
  std::vector<Participation> participations;
  std::int64_t gold_correct = 0;
  std::int64_t gold_total = 0;
  bool trusted = true;

  bool operator==(const WorkerRecord&) const = default;
};

Json to_json(const WorkerRecord& w);
WorkerRecord worker_record_from_json(const Json& j);

// trusted <=> gold_total < warmup or gold_correct / gold_total >= threshold
bool is_trusted(std::int64_t gold_correct, std::int64_t gold_total, const EligibilityPolicy& p);

enum class Action { proceed, block };

enum class Reason {
  new_assignment,
  returning_same_allowed,
  returning_crossover_allowed,
  repeat_blocked,
  crossover_blocked,
  quota_exhausted,
  untrusted,
  task_closed,
};

std::string_view to_string(Action a);
std::string_view to_string(Reason r);

struct AssignmentDecision {
  Action action = Action::block;
  std::optional<std::string> group_id;  // present iff proceed
  std::optional<std::string> block_id;  // block the worker is routed to
  Reason reason = Reason::repeat_blocked;
  std::string message;
  std::string canonical_id;
  // What an enforcing policy would have said. Equals (action == proceed)
  // when eligibility is enforced; in observe mode it is the shadow verdict.
  bool compliant = true;

  bool operator==(const AssignmentDecision&) const = default;
};

Json to_json(const AssignmentDecision& d);
AssignmentDecision decision_from_json(const Json& j);

// Per-run configuration the manager needs; persistent state lives in the
// store.
struct RunContext {
  std::string run_id;
  EligibilityPolicy policy;
  std::optional<QuotaConfig> quotas;
  std::vector<std::string> groups;  // declaration order
  std::map<std::string, std::vector<std::string>> blocks_by_group;
  std::uint64_t seed = 0;
  bool enforce_eligibility = true;
  bool enforce_quotas = true;
  // Whether a Do block still accepts new workers; defaults to always.
  std::function<bool(const std::string& block_id)> block_open;
};

// Eligibility, assignment, identity and quota bookkeeping. Every decision
// runs as one store transaction whose commit point is a compare-and-set, so
// decide_eligibility and record_judgment are linearizable per worker.
class WorkerManager {
 public:
  WorkerManager(store::Store& store, const Clock& clock);

  void register_run(RunContext ctx);
  bool has_run(const std::string& run_id) const;
  const RunContext& context(const std::string& run_id) const;

  // Union-find over "p:<platform id>" and "f:<fingerprint>" nodes. When two
  // existing identities meet, the fingerprint's side wins; the merge is
  // appended to the audit log under `audit_run`.
  std::string resolve_identity(const std::string& platform_id, const std::string& fingerprint,
                               const std::string& audit_run = "");

  // Page-load hook decision for a worker landing on `block_id`. Replays of
  // the same (worker, platform id, block) session return the stored
  // decision unchanged.
  AssignmentDecision decide_eligibility(const std::string& run_id,
                                        const std::string& platform_id,
                                        const std::string& fingerprint,
                                        const std::string& country,
                                        const std::string& block_id);

  // Draws the next slot of the balanced block randomization. Closed groups
  // are skipped.
  std::string assign_condition(const std::string& run_id, const std::string& canonical_id);

  // Attributes and records a judgment. Fills group, trust, compliance and
  // validity from the worker's state. Throws protocol-violation when the
  // worker holds no assignment for the judgment's block.
  platform::Judgment record_judgment(const std::string& run_id, const std::string& canonical_id,
                                     platform::Judgment judgment);

  // Quota gate and record_judgment in one atomic step; nullopt when the
  // worker's bucket is at its cap.
  std::optional<platform::Judgment> admit_judgment(const std::string& run_id,
                                                   const std::string& canonical_id,
                                                   platform::Judgment judgment);

  // Quota gate for one more judgment from `country` right now.
  QuotaCheck quota_for(const std::string& run_id, const std::string& country);
  std::map<std::string, std::int64_t> bucket_counts(const std::string& run_id);

  // Advances the soft-rotate mapping by one checkpoint and audits it.
  BucketRotation rotate_buckets(const std::string& run_id);
  // Replaces the run's quota config (applied by the orchestrator at a
  // checkpoint) and audits the change.
  void apply_quotas(const std::string& run_id, const QuotaConfig& q);

  std::optional<WorkerRecord> worker(const std::string& canonical_id);
  std::map<std::string, std::int64_t> group_assignment_counts(const std::string& run_id);
  std::int64_t draws(const std::string& run_id);

 private:
  struct Assignment {
    std::string group_id;
    std::string block_id;
  };

  RunContext& ctx(const std::string& run_id);
  std::string find_root(const std::string& node);
  std::optional<Assignment> load_assignment(const std::string& run_id, const std::string& cid);
  std::string route_block(const RunContext& c, const std::string& group,
                          const std::string& requested);
  std::optional<std::string> draw_group(RunContext& c, const std::string& bucket);
  WorkerRecord load_or_new(const std::string& cid, const std::string& country);
  void save_worker(const WorkerRecord& w);
  void audit(const std::string& run_id, std::string_view kind, const Json& detail);
  std::int64_t rotation_index(const std::string& run_id);

  store::Store& store_;
  const Clock& clock_;
  mutable std::mutex ctx_mu_;
  std::map<std::string, RunContext> runs_;
};

}  // namespace crowdctl::workers
