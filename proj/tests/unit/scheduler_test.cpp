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

#include <random>

#include "crowdctl/common/error.hpp"
#include "crowdctl/scheduler/schedule.hpp"
#include "support.hpp"

using namespace crowdctl;
using namespace crowdctl::scheduler;
using fixture::at_utc;

namespace {

Schedule weekday_afternoons() {
  Schedule s;
  s.windows = {TimeWindow{{1, 2, 3, 4, 5}, 14, 18}};
  return s;
}

Schedule two_windows(bool balance) {
  Schedule s;
  s.windows = {TimeWindow{{}, 6, 10}, TimeWindow{{}, 18, 22}};
  s.balance_across_groups = balance;
  s.balance_tolerance = 5;
  return s;
}

}  // namespace

TEST(IsActive, WindowStartIsInclusive) {
  const auto s = weekday_afternoons();
  EXPECT_TRUE(is_active(s, at_utc("2026-03-02T14:00:00.000Z")));   // Monday
  EXPECT_FALSE(is_active(s, at_utc("2026-03-02T13:59:59.000Z")));
  EXPECT_FALSE(is_active(s, at_utc("2026-03-02T18:00:00.000Z")));  // end exclusive
  EXPECT_FALSE(is_active(s, at_utc("2026-03-01T15:00:00.000Z")));  // Sunday
}

TEST(IsActive, WindowWrappingMidnight) {
  Schedule s;
  s.windows = {TimeWindow{{}, 22, 2}};
  EXPECT_TRUE(is_active(s, at_utc("2026-03-02T23:30:00.000Z")));
  EXPECT_TRUE(is_active(s, at_utc("2026-03-03T01:59:00.000Z")));
  EXPECT_FALSE(is_active(s, at_utc("2026-03-03T02:00:00.000Z")));
  EXPECT_FALSE(is_active(s, at_utc("2026-03-02T21:59:59.000Z")));
}

TEST(IsActive, WrapBelongsToTheStartDay) {
  Schedule s;
  s.windows = {TimeWindow{{1}, 22, 2}};  // Monday night only
  EXPECT_TRUE(is_active(s, at_utc("2026-03-03T01:00:00.000Z")));   // Tuesday early, Monday's window
  EXPECT_FALSE(is_active(s, at_utc("2026-03-02T01:00:00.000Z")));  // Monday early, Sunday's window
}

TEST(IsActive, NoWindowsMeansAlwaysActive) {
  Schedule s;
  EXPECT_TRUE(is_active(s, at_utc("2026-03-02T03:17:00.000Z")));
  EXPECT_EQ(window_index(s, at_utc("2026-03-02T03:17:00.000Z")), 0u);
}

TEST(Validate, BadHoursAreReported) {
  Schedule s;
  s.windows = {TimeWindow{{}, 25, 3}, TimeWindow{{9}, 4, 4}};
  EXPECT_FALSE(validate_schedule(s).empty());
  EXPECT_TRUE(validate_schedule(weekday_afternoons()).empty());
}

TEST(Codec, RoundTripAndStrictness) {
  auto s = two_windows(true);
  s.checkpoint_every.judgments = 50;
  s.checkpoint_every.duration = std::chrono::seconds(3600);
  EXPECT_EQ(schedule_from_json(to_json(s)), s);
  Json bad = to_json(s);
  bad["windowz"] = Json::array();
  EXPECT_THROW(schedule_from_json(bad), Error);
}

TEST(OnTick, PauseOnLeavingAndResumeOnEntering) {
  const auto s = weekday_afternoons();
  SchedulerState st;
  EXPECT_TRUE(on_tick(st, s, at_utc("2026-03-02T15:00:00.000Z")).empty());
  EXPECT_EQ(on_tick(st, s, at_utc("2026-03-02T18:00:00.000Z")), std::vector<Command>{Command::pause_run});
  EXPECT_TRUE(on_tick(st, s, at_utc("2026-03-02T19:00:00.000Z")).empty());
  EXPECT_EQ(on_tick(st, s, at_utc("2026-03-03T14:00:00.000Z")), std::vector<Command>{Command::resume_run});
}

TEST(OnTick, UserPauseHoldsThroughWindows) {
  const auto s = weekday_afternoons();
  SchedulerState st;
  st.paused_by_user = true;
  EXPECT_EQ(on_tick(st, s, at_utc("2026-03-02T15:00:00.000Z")), std::vector<Command>{Command::pause_run});
  EXPECT_TRUE(on_tick(st, s, at_utc("2026-03-03T15:00:00.000Z")).empty());
}

TEST(OnTick, CheckpointAfterFiftyJudgments) {
  Schedule s;
  s.checkpoint_every.judgments = 50;
  SchedulerState st;
  const auto t = at_utc("2026-03-02T10:00:00.000Z");
  for (int i = 0; i < 49; ++i) note_judgment(st, s, "g", t);
  EXPECT_TRUE(on_tick(st, s, t).empty());
  note_judgment(st, s, "g", t);
  EXPECT_EQ(on_tick(st, s, t), std::vector<Command>{Command::checkpoint});
  EXPECT_EQ(st.judgments_since_checkpoint, 0);
  EXPECT_EQ(st.checkpoints, 1);
}

TEST(OnTick, CheckpointOnDuration) {
  Schedule s;
  s.checkpoint_every.duration = std::chrono::seconds(3600);
  SchedulerState st;
  EXPECT_TRUE(on_tick(st, s, at_utc("2026-03-02T10:00:00.000Z")).empty());
  EXPECT_TRUE(on_tick(st, s, at_utc("2026-03-02T10:59:59.000Z")).empty());
  EXPECT_EQ(on_tick(st, s, at_utc("2026-03-02T11:00:00.000Z")), std::vector<Command>{Command::checkpoint});
}

TEST(OnTick, CommandsAlternateAndMatchActivityProperty) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Schedule s;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      const int a = static_cast<int>(rng() % 24);
      int b = static_cast<int>(rng() % 24);
      if (b == a) b = (a + 1) % 24;
      s.windows.push_back(TimeWindow{{}, a, b});
    }
    SchedulerState st;
    auto t = at_utc("2026-03-02T00:00:00.000Z");
    std::optional<Command> last;
    for (int step = 0; step < 400; ++step) {
      t += std::chrono::minutes(7 + static_cast<int>(rng() % 60));
      for (const auto c : on_tick(st, s, t)) {
        if (c == Command::checkpoint) continue;
        if (last) EXPECT_NE(*last, c);
        else EXPECT_EQ(c, Command::pause_run);  // runs start active
        last = c;
      }
      EXPECT_EQ(st.active, is_active(s, t));
    }
  }
}

TEST(Admission, OutsideWindowIsRejected) {
  const auto s = weekday_afternoons();
  SchedulerState st;
  EXPECT_FALSE(admits_judgment(st, s, "g", at_utc("2026-03-02T09:00:00.000Z")));
  EXPECT_TRUE(admits_judgment(st, s, "g", at_utc("2026-03-02T14:30:00.000Z")));
}

TEST(Admission, BalancingCapsTheBusyWindow) {
  const auto s = two_windows(true);
  SchedulerState st;
  const auto morning = at_utc("2026-03-02T07:00:00.000Z");
  for (int i = 0; i < 5; ++i) {
    ASSERT_TRUE(admits_judgment(st, s, "g", morning));
    note_judgment(st, s, "g", morning);
  }
  EXPECT_FALSE(admits_judgment(st, s, "g", morning));
  EXPECT_TRUE(admits_judgment(st, s, "other", morning));
  const auto evening = at_utc("2026-03-02T19:00:00.000Z");
  EXPECT_TRUE(admits_judgment(st, s, "g", evening));
  note_judgment(st, s, "g", evening);
  EXPECT_TRUE(admits_judgment(st, s, "g", morning));
}

TEST(Admission, NoBalancingAdmitsFreely) {
  const auto s = two_windows(false);
  SchedulerState st;
  const auto morning = at_utc("2026-03-02T07:00:00.000Z");
  for (int i = 0; i < 100; ++i) note_judgment(st, s, "g", morning);
  EXPECT_TRUE(admits_judgment(st, s, "g", morning));
}

TEST(WindowBalance, Scores) {
  EXPECT_DOUBLE_EQ(window_balance({{{"g", 10}}, {{"g", 10}}}).score, 0.0);
  EXPECT_DOUBLE_EQ(window_balance({{{"g", 0}}, {{"g", 20}}}).score, 2.0);
  EXPECT_DOUBLE_EQ(window_balance({{{"g", 17}}}).score, 0.0);
  const auto b = window_balance({{{"g", 10}, {"h", 0}}, {{"g", 10}, {"h", 20}}});
  EXPECT_DOUBLE_EQ(b.groups.at("g").score, 0.0);
  EXPECT_DOUBLE_EQ(b.score, 2.0);
}

TEST(SchedulerState, CodecRoundTrip) {
  SchedulerState st;
  st.run_id = "r1";
  st.active = false;
  st.last_checkpoint_at = at_utc("2026-03-02T10:00:00.000Z");
  st.checkpoints = 3;
  st.window_counts = {{{"g", 4}}, {{"g", 2}, {"h", 1}}};
  EXPECT_EQ(scheduler_state_from_json(to_json(st)), st);
}

TEST(NextTransition, FindsTheWindowEdge) {
  const auto s = weekday_afternoons();
  const auto t = next_transition(s, at_utc("2026-03-02T10:00:00.000Z"), at_utc("2026-03-09T00:00:00.000Z"));
  ASSERT_TRUE(t);
  EXPECT_EQ(*t, at_utc("2026-03-02T14:00:00.000Z"));
}
