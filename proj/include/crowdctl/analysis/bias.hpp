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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crowdctl/analysis/robust.hpp"
#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/platform/judgment.hpp"
#include "crowdctl/scheduler/schedule.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::analysis {

inline constexpr int kReportVersion = 1;

// A worker's stay in one block: every judgment they gave there. Judgments
// without a canonical worker id are attributed to the platform worker id.
struct Participation {
  std::string worker_id;
  std::string block_id;
  std::string group_id;
  Timestamp first_at;
  int ordinal = 0;  // 0 for the worker's first participation
  std::vector<std::size_t> judgments;  // indices into the log
};

// Participations in order of first judgment per worker (ties keep log
// order), workers in order of first appearance.
std::vector<Participation> participations(const std::vector<platform::Judgment>& log);

struct CohortFractions {
  double returning = 0.0;  // workers with >= 2 participations
  double crossover = 0.0;  // workers with >= 2 distinct groups
  std::int64_t workers = 0;
};

// Throws invalid-argument on an empty log.
CohortFractions cohort_fractions(const std::vector<platform::Judgment>& log);

struct Dominance {
  int k = 3;
  double top_k_share = 0.0;
  std::vector<std::pair<std::string, double>> shares;  // share desc, code asc
};

// Shares of judgments per country. Throws invalid-argument when a judgment
// has no country.
Dominance dominance(const std::vector<platform::Judgment>& log, int k = 3);
Dominance dominance_from_counts(const std::map<std::string, std::int64_t>& counts, int k = 3);

enum class CleanupPolicy { drop_returning, drop_crossover, drop_untrusted };
std::string_view to_string(CleanupPolicy p);
CleanupPolicy cleanup_policy_from_string(std::string_view s);

struct DiscardEstimate {
  double fraction = 0.0;                        // judgments matching any policy
  std::map<std::string, double> per_policy;     // each policy on its own
  std::int64_t discarded = 0;
  std::int64_t total = 0;
};

// drop-returning: every judgment of a worker with >= 2 participations;
// drop-crossover: every judgment of a worker seen in >= 2 groups;
// drop-untrusted: judgments recorded while the worker was untrusted.
DiscardEstimate estimate_discard(const std::vector<platform::Judgment>& log,
                                 const std::set<CleanupPolicy>& policies);

enum class Cohort {
  new_worker,
  returning_same,
  support_to_base,
  base_to_support,
  bad_to_good,
  crossover_other,
  untrusted,
};
inline constexpr Cohort kAllCohorts[] = {Cohort::new_worker,      Cohort::returning_same,
                                         Cohort::support_to_base, Cohort::base_to_support,
                                         Cohort::bad_to_good,     Cohort::crossover_other,
                                         Cohort::untrusted};
std::string_view to_string(Cohort c);

// Workers whose latest judgment is untrusted put every participation in
// the untrusted cohort. Otherwise a first participation is new and later
// ones are classified against the worker's previous participation: same
// group, a support kind to base, base to a support kind, bad to good
// support, or anything else (crossover-other).
std::vector<Cohort> classify(const std::vector<Participation>& parts,
                             const std::vector<platform::Judgment>& log,
                             const std::map<std::string, workflow::ConditionKind>& group_kinds);

struct WorkerAccuracy {
  std::string worker_id;
  bool returning = false;
  std::int64_t gold = 0;
  double accuracy = 0.0;
};

// Per-worker gold accuracy for workers with at least one gold judgment.
std::vector<WorkerAccuracy> worker_accuracies(const std::vector<platform::Judgment>& log);

enum class Metric { decision_time, accuracy };
std::string_view to_string(Metric m);

struct ZScoreSummary {
  Cohort cohort = Cohort::new_worker;
  Metric metric = Metric::decision_time;
  std::int64_t n = 0;
  std::optional<double> median_z;  // absent when n < 5 or the reference is degenerate
  std::optional<double> iqr;
  std::string scaling = "mad";     // "mad" or "iqr-fallback"
  std::vector<std::string> flags;  // "insufficient-n", "degenerate-reference"
};

struct ReportConfig {
  std::string run_id;                       // header only, excluded from the digest
  std::optional<Timestamp> generated_at;    // header only, excluded from the digest
  int top_k = 3;
  std::set<CleanupPolicy> cleanup = {CleanupPolicy::drop_returning};
  double mad_scale = kMadScale;
  // Standardize within each group against that group's reference before
  // pooling, instead of pooling first.
  bool per_condition = false;
  std::map<std::string, workflow::ConditionKind> group_kinds;
  // Scheduler window counts; empty when the run had no windows.
  std::vector<std::map<std::string, std::int64_t>> window_counts;
};

struct BiasReport {
  std::string run_id;
  std::optional<Timestamp> generated_at;
  std::int64_t total_judgments = 0;
  std::int64_t total_workers = 0;
  std::int64_t total_participations = 0;
  CohortFractions fractions;
  Dominance dominance;
  std::map<Cohort, std::int64_t> cohort_sizes;  // participations per cohort
  std::vector<ZScoreSummary> z_summaries;       // cohort x metric
  DiscardEstimate discard;
  std::vector<std::string> discard_policies;
  scheduler::WindowBalance balance;
  bool per_condition = false;
  double mad_scale = kMadScale;
  std::map<std::string, std::int64_t> group_judgments;
  std::string digest;  // sha256 of the report JSON without run id and time
};

extern const char* const kValidContributionDefinition;

// Throws invalid-argument on an empty log. Same log and config give the
// same bytes.
BiasReport build_report(const std::vector<platform::Judgment>& log, const ReportConfig& config);

Json to_json(const BiasReport& r);
std::string to_text(const BiasReport& r);

}  // namespace crowdctl::analysis
