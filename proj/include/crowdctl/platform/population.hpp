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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/common/violation.hpp"
#include "crowdctl/workflow/types.hpp"

namespace crowdctl::platform {

using Diurnal = std::array<double, 24>;  // activity multiplier per local hour

struct CountryProfile {
  std::string code;
  double weight = 1.0;  // arrivals per hour at diurnal multiplier 1
  int utc_offset_hours = 0;
  Diurnal diurnal{};

  bool operator==(const CountryProfile&) const = default;
};

struct LogNormalTime {
  double median_s = 24.0;
  double sigma = 0.5;

  bool operator==(const LogNormalTime&) const = default;
};

using KindPair = std::pair<workflow::ConditionKind, workflow::ConditionKind>;

// Parametric worker population driving the simulated platform.
struct PopulationProfile {
  std::vector<CountryProfile> countries;
  double return_probability = 0.38;
  // Given a return, chance of landing in a different condition.
  double cross_condition_probability = 0.30 / 0.38;
  LogNormalTime decision_time;
  std::map<std::string, double> group_multipliers;  // by group id; absent = 1
  double returning_same_speedup = 14.0 / 24.0;
  std::map<KindPair, double> crossover_multipliers;  // (from, to) kinds; absent = 1
  double base_accuracy = 0.92;
  double fingerprint_collision_rate = 0.0;
  std::uint64_t seed = 1;
  // Pages a worker is willing to do overall; returners split them across
  // their two sessions.
  int pages_min = 2;
  int pages_max = 5;
  double return_delay_mean_hours = 6.0;
  double page_gap_s = 5.0;

  bool operator==(const PopulationProfile&) const = default;
};

// Shared day-active shape (mean 1): quiet at night, peaking in the evening.
Diurnal default_diurnal();
// Active 08:00-20:00 local, zero otherwise (mean 1 over active hours).
Diurnal day_only_diurnal();
Diurnal flat_diurnal();

// Heavy-tailed default: VE 0.285, EG 0.118, UA 0.078, then a geometric tail
// over further countries holding the remaining 0.519. `arrivals_per_hour`
// scales the weights.
PopulationProfile default_profile(double arrivals_per_hour = 4.0);

Json to_json(const PopulationProfile& p);
PopulationProfile profile_from_json(const Json& j);
Violations validate_profile(const PopulationProfile& p);

double expected_arrivals(const PopulationProfile& p, Timestamp hour_start);

enum class SimEventKind { worker_arrival, page_load, judgment_submitted, worker_returns };
std::string_view to_string(SimEventKind k);

struct SimEvent {
  Timestamp time;
  std::uint64_t seq = 0;
  SimEventKind kind = SimEventKind::worker_arrival;
  std::int64_t worker = -1;  // serial; -1 before the arrival is processed
  std::string country;
  std::string detail;

  bool operator==(const SimEvent&) const = default;
};

// Arrivals in [t0, t1). Each UTC hour is drawn as a whole from its own
// stream seeded by (seed, hour, country), so the result does not depend on
// how a caller slices time. Events are sorted by time then country order.
std::vector<SimEvent> simulate_arrivals(const PopulationProfile& p, Timestamp t0, Timestamp t1);

struct BehaviorContext {
  bool is_returning = false;
  std::optional<std::string> from_group;  // present iff returning
  std::string to_group;
  workflow::ConditionKind from_kind = workflow::ConditionKind::unspecified;
  workflow::ConditionKind to_kind = workflow::ConditionKind::unspecified;
};

struct Behavior {
  double decision_time_s = 0.0;
  bool correct = false;
};

// decision time = lognormal draw x group multiplier x speedup (returning,
// same group) x crossover multiplier (returning, other group); correctness
// is Bernoulli(base accuracy) whatever the worker's history.
Behavior simulate_worker_behavior(const PopulationProfile& p, std::mt19937_64& rng,
                                  const BehaviorContext& ctx);

std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b);

}  // namespace crowdctl::platform
