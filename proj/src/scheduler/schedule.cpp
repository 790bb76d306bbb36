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

#include "crowdctl/scheduler/schedule.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace crowdctl::scheduler {
namespace {

constexpr std::array<std::string_view, 7> kDayNames = {"sun", "mon", "tue", "wed",
                                                       "thu", "fri", "sat"};

unsigned parse_day(const std::string& name, const std::string& path) {
  for (unsigned i = 0; i < kDayNames.size(); ++i) {
    if (kDayNames[i] == name) return i;
  }
  throw Error(errc::parse_error, "bad day '" + name + "' at " + path);
}

bool day_allowed(const TimeWindow& w, unsigned day) {
  return w.days.empty() || w.days.contains(day);
}

bool in_window(const TimeWindow& w, Timestamp t) {
  const std::int64_t sod = seconds_of_day(t);
  const std::int64_t start = std::int64_t{w.start_hour} * 3600;
  const std::int64_t end = std::int64_t{w.end_hour} * 3600;
  const unsigned day = weekday_index(t);
  if (start < end) return sod >= start && sod < end && day_allowed(w, day);
  // Wrapping window: the post-midnight part belongs to the previous day.
  if (sod >= start) return day_allowed(w, day);
  if (sod < end) return day_allowed(w, (day + 6) % 7);
  return false;
}

}  // namespace

Json to_json(const Schedule& s) {
  Json windows = Json::array();
  for (const auto& w : s.windows) {
    Json days = Json::array();
    for (unsigned d : w.days) days.push_back(kDayNames[d]);
    Json jw{{"startHour", w.start_hour}, {"endHour", w.end_hour}};
    if (!w.days.empty()) jw["days"] = days;
    windows.push_back(std::move(jw));
  }
  Json cp = Json::object();
  if (s.checkpoint_every.judgments) cp["judgments"] = *s.checkpoint_every.judgments;
  if (s.checkpoint_every.duration) cp["seconds"] = s.checkpoint_every.duration->count();
  Json j{{"windows", windows},
         {"checkpointEvery", cp},
         {"balanceAcrossGroups", s.balance_across_groups},
         {"balanceTolerance", s.balance_tolerance}};
  if (s.spread_over) j["spreadOverHours"] = s.spread_over->count();
  return j;
}

Schedule schedule_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  Schedule s;
  const Json& windows = r.required_json("windows");
  if (!windows.is_array()) throw Error(errc::parse_error, "expected array at " + path + ".windows");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const std::string wpath = path + ".windows[" + std::to_string(i) + "]";
    ObjectReader wr(windows[i], wpath);
    TimeWindow w;
    for (const auto& d : wr.value_or<std::vector<std::string>>("days", {})) {
      w.days.insert(parse_day(d, wpath + ".days"));
    }
    w.start_hour = wr.required<int>("startHour");
    w.end_hour = wr.required<int>("endHour");
    wr.finish();
    s.windows.push_back(std::move(w));
  }
  if (const Json* cp = r.optional_json("checkpointEvery")) {
    ObjectReader cr(*cp, path + ".checkpointEvery");
    s.checkpoint_every.judgments = cr.optional<std::int64_t>("judgments");
    if (auto secs = cr.optional<std::int64_t>("seconds")) {
      s.checkpoint_every.duration = std::chrono::seconds{*secs};
    }
    cr.finish();
  }
  if (auto h = r.optional<std::int64_t>("spreadOverHours")) s.spread_over = std::chrono::hours{*h};
  s.balance_across_groups = r.value_or<bool>("balanceAcrossGroups", false);
  s.balance_tolerance = r.value_or<std::int64_t>("balanceTolerance", s.balance_tolerance);
  r.finish();
  return s;
}

Violations validate_schedule(const Schedule& s) {
  Violations out;
  for (std::size_t i = 0; i < s.windows.size(); ++i) {
    const auto& w = s.windows[i];
    const std::string subject = "window[" + std::to_string(i) + "]";
    if (w.start_hour < 0 || w.start_hour >= 24 || w.end_hour < 0 || w.end_hour >= 24) {
      out.push_back({"schedule-hours", "window hours must be in [0,24)", subject});
    } else if (w.start_hour == w.end_hour) {
      out.push_back({"schedule-hours", "window start equals end", subject});
    }
  }
  if (s.checkpoint_every.judgments && *s.checkpoint_every.judgments <= 0) {
    out.push_back({"schedule-checkpoint", "checkpoint judgment count must be positive", ""});
  }
  if (s.checkpoint_every.duration && s.checkpoint_every.duration->count() <= 0) {
    out.push_back({"schedule-checkpoint", "checkpoint duration must be positive", ""});
  }
  if (s.spread_over && s.spread_over->count() <= 0) {
    out.push_back({"schedule-spread", "spread-over must be positive", ""});
  }
  if (s.balance_tolerance <= 0) {
    out.push_back({"schedule-balance", "balance tolerance must be positive", ""});
  }
  return out;
}

bool is_active(const Schedule& s, Timestamp now) {
  if (s.windows.empty()) return true;
  return std::any_of(s.windows.begin(), s.windows.end(),
                     [&](const TimeWindow& w) { return in_window(w, now); });
}

std::optional<std::size_t> window_index(const Schedule& s, Timestamp t) {
  if (s.windows.empty()) return 0;
  for (std::size_t i = 0; i < s.windows.size(); ++i) {
    if (in_window(s.windows[i], t)) return i;
  }
  return std::nullopt;
}

std::size_t window_count(const Schedule& s) { return std::max<std::size_t>(1, s.windows.size()); }

std::optional<Timestamp> next_transition(const Schedule& s, Timestamp from, Timestamp horizon) {
  if (s.windows.empty()) return std::nullopt;
  const bool current = is_active(s, from);
  auto t = std::chrono::ceil<std::chrono::hours>(from);
  if (t == from) t += std::chrono::hours{1};
  for (; t <= horizon; t += std::chrono::hours{1}) {
    if (is_active(s, t) != current) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::pause_run: return "pause-run";
    case Command::resume_run: return "resume-run";
    case Command::checkpoint: return "checkpoint";
  }
  return "?";
}

Json to_json(const SchedulerState& s) {
  Json j{{"runId", s.run_id},
         {"active", s.active},
         {"pausedByUser", s.paused_by_user},
         {"judgmentsSinceCheckpoint", s.judgments_since_checkpoint},
         {"checkpoints", s.checkpoints},
         {"windowCounts", s.window_counts}};
  if (s.last_checkpoint_at) j["lastCheckpointAt"] = format_utc(*s.last_checkpoint_at);
  return j;
}

SchedulerState scheduler_state_from_json(const Json& j) {
  SchedulerState s;
  s.run_id = j.at("runId").get<std::string>();
  s.active = j.at("active").get<bool>();
  s.paused_by_user = j.at("pausedByUser").get<bool>();
  s.judgments_since_checkpoint = j.at("judgmentsSinceCheckpoint").get<std::int64_t>();
  s.checkpoints = j.at("checkpoints").get<std::int64_t>();
  s.window_counts = j.at("windowCounts").get<decltype(s.window_counts)>();
  if (j.contains("lastCheckpointAt")) {
    s.last_checkpoint_at = parse_utc(j.at("lastCheckpointAt").get<std::string>());
  }
  return s;
}

std::vector<Command> on_tick(SchedulerState& state, const Schedule& s, Timestamp now) {
  std::vector<Command> out;
  const bool should_run = is_active(s, now) && !state.paused_by_user;
  if (state.active && !should_run) {
    out.push_back(Command::pause_run);
  } else if (!state.active && should_run) {
    out.push_back(Command::resume_run);
  }
  state.active = should_run;

  if (!state.last_checkpoint_at) state.last_checkpoint_at = now;
  bool due = false;
  if (s.checkpoint_every.judgments &&
      state.judgments_since_checkpoint >= *s.checkpoint_every.judgments) {
    due = true;
  }
  if (s.checkpoint_every.duration && now - *state.last_checkpoint_at >= *s.checkpoint_every.duration) {
    due = true;
  }
  if (due) {
    out.push_back(Command::checkpoint);
    state.last_checkpoint_at = now;
    state.judgments_since_checkpoint = 0;
    ++state.checkpoints;
  }
  return out;
}

bool admits_judgment(const SchedulerState& state, const Schedule& s, const std::string& group,
                     Timestamp now) {
  const auto w = window_index(s, now);
  if (!w) return false;
  if (!s.balance_across_groups || window_count(s) < 2) return true;
  auto count_in = [&](std::size_t idx) -> std::int64_t {
    if (idx >= state.window_counts.size()) return 0;
    auto it = state.window_counts[idx].find(group);
    return it == state.window_counts[idx].end() ? 0 : it->second;
  };
  std::int64_t quietest = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 0; i < window_count(s); ++i) quietest = std::min(quietest, count_in(i));
  return count_in(*w) < quietest + s.balance_tolerance;
}

void note_judgment(SchedulerState& state, const Schedule& s, const std::string& group,
                   Timestamp at) {
  const auto w = window_index(s, at);
  if (!w) return;
  if (state.window_counts.size() < window_count(s)) state.window_counts.resize(window_count(s));
  ++state.window_counts[*w][group];
  ++state.judgments_since_checkpoint;
}

WindowBalance window_balance(const std::vector<std::map<std::string, std::int64_t>>& counts) {
  WindowBalance out;
  std::set<std::string> groups;
  for (const auto& per_window : counts) {
    for (const auto& [g, _] : per_window) groups.insert(g);
  }
  for (const auto& g : groups) {
    GroupWindowBalance gb;
    for (const auto& per_window : counts) {
      auto it = per_window.find(g);
      gb.counts.push_back(it == per_window.end() ? 0 : it->second);
    }
    if (gb.counts.size() >= 2) {
      const auto [lo, hi] = std::minmax_element(gb.counts.begin(), gb.counts.end());
      double sum = 0;
      for (auto c : gb.counts) sum += static_cast<double>(c);
      const double mean = sum / static_cast<double>(gb.counts.size());
      gb.score = mean > 0 ? static_cast<double>(*hi - *lo) / mean : 0.0;
    }
    out.score = std::max(out.score, gb.score);
    out.groups.emplace(g, std::move(gb));
  }
  return out;
}

WindowBalance window_balance(const SchedulerState& state) {
  return window_balance(state.window_counts);
}

Json to_json(const WindowBalance& b) {
  Json groups = Json::object();
  for (const auto& [g, gb] : b.groups) {
    groups[g] = Json{{"counts", gb.counts}, {"score", gb.score}};
  }
  return Json{{"groups", groups}, {"score", b.score}};
}

}  // namespace crowdctl::scheduler
