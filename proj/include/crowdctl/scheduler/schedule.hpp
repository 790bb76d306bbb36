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

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/common/violation.hpp"

namespace crowdctl::scheduler {

// A daily UTC window [start_hour, end_hour). When start > end the window
// wraps midnight and belongs to the day it starts on.
struct TimeWindow {
  std::set<unsigned> days;  // 0 = Sunday; empty means every day
  int start_hour = 0;
  int end_hour = 0;

  bool operator==(const TimeWindow&) const = default;
};

struct CheckpointEvery {
  std::optional<std::int64_t> judgments;
  std::optional<std::chrono::seconds> duration;

  bool operator==(const CheckpointEvery&) const = default;
};

struct Schedule {
  std::vector<TimeWindow> windows;
  CheckpointEvery checkpoint_every;
  std::optional<std::chrono::hours> spread_over;
  bool balance_across_groups = false;
  // Maximum lead, in judgments, of a group's busiest window over its
  // quietest one while balancing is on.
  std::int64_t balance_tolerance = 30;

  bool operator==(const Schedule&) const = default;
};

Json to_json(const Schedule& s);
Schedule schedule_from_json(const Json& j, const std::string& path = "schedule");
Violations validate_schedule(const Schedule& s);

// Start inclusive, end exclusive. No windows means always active.
bool is_active(const Schedule& s, Timestamp now);

// Index of the first window containing `t`; 0 for an unscheduled run.
std::optional<std::size_t> window_index(const Schedule& s, Timestamp t);
std::size_t window_count(const Schedule& s);

// Earliest instant >= `from` at which is_active flips, searching up to
// `horizon`. Used to align simulation steps with window edges.
std::optional<Timestamp> next_transition(const Schedule& s, Timestamp from, Timestamp horizon);

enum class Command { pause_run, resume_run, checkpoint };
std::string_view to_string(Command c);

struct SchedulerState {
  std::string run_id;
  // Whether the run is currently allowed to collect; starts true because a
  // freshly started run is running until the first tick says otherwise.
  bool active = true;
  bool paused_by_user = false;
  std::optional<Timestamp> last_checkpoint_at;
  std::int64_t judgments_since_checkpoint = 0;
  std::int64_t checkpoints = 0;
  // window index -> group -> accepted judgments
  std::vector<std::map<std::string, std::int64_t>> window_counts;

  bool operator==(const SchedulerState&) const = default;
};

Json to_json(const SchedulerState& s);
SchedulerState scheduler_state_from_json(const Json& j);

// Emits pause on leaving every window, resume on entering one, and
// checkpoint when checkpoint_every has elapsed. Updates `state`.
std::vector<Command> on_tick(SchedulerState& state, const Schedule& s, Timestamp now);

// Whether a judgment for `group` may be accepted at `now`: inside a window,
// and, with balancing on, without pushing this window ahead of the group's
// quietest window by more than the tolerance.
bool admits_judgment(const SchedulerState& state, const Schedule& s, const std::string& group,
                     Timestamp now);

void note_judgment(SchedulerState& state, const Schedule& s, const std::string& group,
                   Timestamp at);

struct GroupWindowBalance {
  std::vector<std::int64_t> counts;  // per window
  double score = 0.0;                // (max - min) / mean
};

struct WindowBalance {
  std::map<std::string, GroupWindowBalance> groups;
  double score = 0.0;  // max over groups
};

WindowBalance window_balance(const SchedulerState& state);
WindowBalance window_balance(const std::vector<std::map<std::string, std::int64_t>>& counts);
Json to_json(const WindowBalance& b);

}  // namespace crowdctl::scheduler
