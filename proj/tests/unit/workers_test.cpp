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

#include <algorithm>
#include <atomic>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "crowdctl/common/error.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workers/manager.hpp"
#include "crowdctl/workers/quota.hpp"
#include "support.hpp"

using namespace crowdctl;
using namespace crowdctl::workers;

namespace {

const std::vector<std::string> kSixGroups = {"g1", "g2", "g3", "g4", "g5", "g6"};

// Two groups with two Do blocks each, so a returning worker can land on a
// fresh block of either group.
RunContext two_group_ctx(Recurrence recurrence = Recurrence::block_all_repeats) {
  RunContext c;
  c.run_id = "r1";
  c.policy.recurrence = recurrence;
  c.groups = {"A", "B"};
  c.blocks_by_group = {{"A", {"a1", "a2"}}, {"B", {"b1", "b2"}}};
  c.seed = 42;
  return c;
}

RunContext six_group_ctx(std::uint64_t seed = 7) {
  RunContext c;
  c.run_id = "r6";
  c.groups = kSixGroups;
  for (const auto& g : kSixGroups) c.blocks_by_group[g] = {"do:" + g};
  c.seed = seed;
  return c;
}

platform::Judgment gold_answer(const std::string& block, bool correct, int minute) {
  auto j = fixture::judgment("", block, "", minute);
  j.is_gold = true;
  j.gold_correct = correct;
  return j;
}

struct Fixture {
  store::Store store{":memory:"};
  ManualClock clock{fixture::at_utc("2026-03-02T10:00:00.000Z")};
  WorkerManager wm{store, clock};
};

}  // namespace

TEST(Identity, SamePairSameId) {
  Fixture f;
  EXPECT_EQ(f.wm.resolve_identity("w1", "fpA"), f.wm.resolve_identity("w1", "fpA"));
}

TEST(Identity, FingerprintDominates) {
  Fixture f;
  EXPECT_EQ(f.wm.resolve_identity("w1", "fpA"), f.wm.resolve_identity("w2", "fpA"));
}

TEST(Identity, PlatformIdLinksFingerprintsAndLogsMerge) {
  Fixture f;
  const auto a = f.wm.resolve_identity("w1", "fpA", "r1");
  const auto c = f.wm.resolve_identity("w9", "fpB", "r1");
  ASSERT_NE(a, c);
  const auto b = f.wm.resolve_identity("w1", "fpB", "r1");
  EXPECT_EQ(f.wm.resolve_identity("w1", "fpA"), b);
  EXPECT_EQ(f.wm.resolve_identity("w9", "fpB"), b);
  const auto events = f.store.audit("r1");
  EXPECT_TRUE(std::any_of(events.begin(), events.end(),
                          [](const store::AuditEvent& e) { return e.kind == "identity-merge"; }));
}

TEST(Eligibility, NewWorkerProceeds) {
  Fixture f;
  f.wm.register_run(two_group_ctx());
  const auto d = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a1");
  EXPECT_EQ(d.action, Action::proceed);
  EXPECT_EQ(d.reason, Reason::new_assignment);
  ASSERT_TRUE(d.group_id);
  EXPECT_TRUE(*d.group_id == "A" || *d.group_id == "B");
}

TEST(Eligibility, RepeatIsBlockedWithMessage) {
  Fixture f;
  f.wm.register_run(two_group_ctx());
  const auto first = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a1");
  ASSERT_EQ(first.action, Action::proceed);
  const auto again = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a2");
  EXPECT_EQ(again.action, Action::block);
  EXPECT_EQ(again.reason, Reason::repeat_blocked);
  EXPECT_FALSE(again.message.empty());
  EXPECT_FALSE(again.group_id);
}

TEST(Eligibility, AllowSameConditionAdmitsOnlyTheSameGroup) {
  Fixture f;
  f.wm.register_run(two_group_ctx(Recurrence::allow_same_condition));
  const auto first = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a1");
  ASSERT_EQ(first.action, Action::proceed);
  const std::string g = *first.group_id;
  const std::string same = g == "A" ? "a2" : "b2";
  const std::string other = g == "A" ? "b2" : "a2";
  const auto back_same = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", same);
  EXPECT_EQ(back_same.action, Action::proceed);
  EXPECT_EQ(*back_same.group_id, g);
  const auto back_other = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", other);
  EXPECT_EQ(back_other.action, Action::block);
  EXPECT_EQ(back_other.reason, Reason::crossover_blocked);
}

TEST(Eligibility, ObserveModeProceedsButRecordsNonCompliance) {
  Fixture f;
  auto c = two_group_ctx();
  c.enforce_eligibility = false;
  f.wm.register_run(c);
  ASSERT_EQ(f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a1").action, Action::proceed);
  const auto again = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "b1");
  EXPECT_EQ(again.action, Action::proceed);
  EXPECT_FALSE(again.compliant);
}

TEST(Eligibility, SessionReplayReturnsStoredDecision) {
  Fixture f;
  f.wm.register_run(two_group_ctx());
  const auto a = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a1");
  const auto b = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a1");
  EXPECT_EQ(a, b);
  EXPECT_EQ(f.wm.draws("r1"), 1);
}

TEST(Eligibility, HundredConcurrentRequestsForOneFingerprintYieldOneProceed) {
  for (int repeat = 0; repeat < 5; ++repeat) {
    Fixture f;
    f.wm.register_run(two_group_ctx());
    std::atomic<int> proceeds{0};
    std::atomic<bool> go{false};
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i) {
      threads.emplace_back([&, i] {
        while (!go.load()) std::this_thread::yield();
        const auto d = f.wm.decide_eligibility("r1", "p" + std::to_string(i), "shared-fp", "VE",
                                               i % 2 ? "a1" : "b1");
        if (d.action == Action::proceed) ++proceeds;
      });
    }
    go.store(true);
    for (auto& t : threads) t.join();
    EXPECT_EQ(proceeds.load(), 1);
  }
}

TEST(Eligibility, BlockAllRepeatsNeverYieldsTwoParticipationsProperty) {
  Fixture f;
  f.wm.register_run(two_group_ctx());
  std::mt19937_64 rng(5);
  const std::vector<std::string> blocks = {"a1", "a2", "b1", "b2"};
  std::set<std::string> cids;
  for (int visit = 0; visit < 400; ++visit) {
    const auto w = std::to_string(rng() % 60);
    const auto block = blocks[rng() % blocks.size()];
    const auto d = f.wm.decide_eligibility("r1", "p" + w + "-" + std::to_string(rng() % 3), "fp" + w, "VE", block);
    cids.insert(d.canonical_id);
    if (d.action == Action::proceed) {
      auto j = fixture::judgment("", *d.block_id, "", visit);
      f.wm.record_judgment("r1", d.canonical_id, j);
    }
  }
  for (const auto& cid : cids) {
    const auto rec = f.wm.worker(cid);
    if (!rec) continue;
    EXPECT_LE(std::count_if(rec->participations.begin(), rec->participations.end(),
                            [](const Participation& p) { return p.run_id == "r1"; }),
              1)
        << cid;
  }
}

TEST(Assignment, SixtyWorkersSixGroupsTenEach) {
  Fixture f;
  f.wm.register_run(six_group_ctx());
  for (int i = 0; i < 60; ++i) f.wm.assign_condition("r6", "w" + std::to_string(i));
  for (const auto& [g, n] : f.wm.group_assignment_counts("r6")) EXPECT_EQ(n, 10) << g;
}

TEST(Assignment, SevenWorkersSixGroups) {
  Fixture f;
  f.wm.register_run(six_group_ctx());
  for (int i = 0; i < 7; ++i) f.wm.assign_condition("r6", "w" + std::to_string(i));
  std::vector<std::int64_t> counts;
  for (const auto& [g, n] : f.wm.group_assignment_counts("r6")) counts.push_back(n);
  std::sort(counts.begin(), counts.end());
  EXPECT_EQ(counts, (std::vector<std::int64_t>{1, 1, 1, 1, 1, 2}));
}

TEST(Assignment, FixedSeedReplaysTheSameSequence) {
  std::vector<std::string> seqs[2];
  for (auto& seq : seqs) {
    Fixture f;
    f.wm.register_run(six_group_ctx(99));
    for (int i = 0; i < 50; ++i) seq.push_back(f.wm.assign_condition("r6", "w" + std::to_string(i)));
  }
  EXPECT_EQ(seqs[0], seqs[1]);
}

TEST(Assignment, EveryPrefixIsBalancedProperty) {
  Fixture f;
  f.wm.register_run(six_group_ctx(3));
  std::map<std::string, std::int64_t> counts;
  for (const auto& g : kSixGroups) counts[g] = 0;
  for (int i = 0; i < 600; ++i) {
    ++counts[f.wm.assign_condition("r6", "w" + std::to_string(i))];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });
    ASSERT_LE(hi->second - lo->second, 1) << "prefix " << i + 1;
  }
}

TEST(Trust, GoldCorrectIncrementsCounter) {
  Fixture f;
  f.wm.register_run(two_group_ctx());
  const auto d = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a1");
  f.wm.record_judgment("r1", d.canonical_id, gold_answer(*d.block_id, true, 0));
  const auto w = f.wm.worker(d.canonical_id);
  EXPECT_EQ(w->gold_correct, 1);
  EXPECT_EQ(w->gold_total, 1);
}

TEST(Trust, TwoOfFourBelowThresholdIsUntrusted) {
  EligibilityPolicy p;
  p.trust_threshold = 0.7;
  p.trust_warmup = 3;
  EXPECT_FALSE(is_trusted(2, 4, p));
  EXPECT_TRUE(is_trusted(1, 2, p));  // still warming up
  EXPECT_TRUE(is_trusted(3, 4, p));
}

TEST(Trust, NonGoldLeavesCountersAndAppendsParticipation) {
  Fixture f;
  f.wm.register_run(two_group_ctx());
  const auto d = f.wm.decide_eligibility("r1", "w1", "fpA", "VE", "a1");
  const auto j = f.wm.record_judgment("r1", d.canonical_id, fixture::judgment("", *d.block_id, "", 0));
  const auto w = f.wm.worker(d.canonical_id);
  EXPECT_EQ(w->gold_total, 0);
  ASSERT_EQ(w->participations.size(), 1u);
  EXPECT_EQ(w->participations[0].group_id, *d.group_id);
  EXPECT_EQ(j.group_id, *d.group_id);
  EXPECT_TRUE(j.valid);
}

TEST(Trust, JudgmentWithoutProceedIsAProtocolViolation) {
  Fixture f;
  f.wm.register_run(two_group_ctx());
  const auto cid = f.wm.resolve_identity("w1", "fpA");
  try {
    f.wm.record_judgment("r1", cid, fixture::judgment("", "a1", "", 0));
    FAIL() << "expected protocol-violation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::protocol_violation);
  }
}

TEST(Quota, CountryMixShares) {
  QuotaConfig q;
  q.buckets = {{"VE", {"VE"}}, {"EG", {"EG"}}, {"UA", {"UA"}}};
  q.max_share = 0.25;
  const std::map<std::string, std::int64_t> counts = {{"VE", 285}, {"EG", 118}, {"UA", 78}, {"rest", 519}};
  const auto ve = check_quota(q, counts, "VE");
  EXPECT_FALSE(ve.allowed);
  EXPECT_NEAR(ve.shares.at("VE"), 0.285, 1e-12);
  EXPECT_TRUE(check_quota(q, counts, "EG").allowed);
  EXPECT_TRUE(check_quota(q, counts, "BR").allowed);
}

TEST(Quota, EmptyStateAllowsEverything) {
  QuotaConfig q;
  q.buckets = {{"VE", {"VE"}}};
  q.max_share = 0.01;
  EXPECT_TRUE(check_quota(q, {}, "VE").allowed);
}

TEST(Quota, HardBlockCapsFinalShareProperty) {
  Fixture f;
  auto c = two_group_ctx(Recurrence::allow_all);
  c.policy.crossover = CrossoverRule::allow;
  QuotaConfig q;
  q.buckets = {{"VE", {"VE"}}, {"EG", {"EG"}}, {"UA", {"UA"}}};
  q.max_share = 0.15;
  c.quotas = q;
  f.wm.register_run(c);
  std::mt19937_64 rng(8);
  const std::vector<std::string> countries = {"VE", "VE", "VE", "VE", "EG", "EG", "UA", "BR", "IN", "US"};
  const std::vector<std::string> blocks = {"a1", "a2", "b1", "b2"};
  std::int64_t total = 0;
  for (int w = 0; w < 150; ++w) {
    const auto country = countries[rng() % countries.size()];
    const auto d = f.wm.decide_eligibility("r1", "p" + std::to_string(w), "fp" + std::to_string(w), country,
                                           blocks[rng() % blocks.size()]);
    if (d.action != Action::proceed) continue;
    for (int k = 0; k < 6; ++k) {
      auto j = fixture::judgment("", *d.block_id, "", w * 10 + k, 20.0, country);
      if (f.wm.admit_judgment("r1", d.canonical_id, j)) ++total;
    }
  }
  ASSERT_GT(total, 0);
  for (const auto& [bucket, n] : f.wm.bucket_counts("r1")) {
    if (bucket == kRestBucket) continue;
    EXPECT_LE(static_cast<double>(n) / static_cast<double>(total), q.max_share + 1.0 / static_cast<double>(total))
        << bucket;
  }
}

TEST(Rotation, ThreeBucketsThreeSetsLatinSquare) {
  std::map<std::size_t, std::set<std::size_t>> seen;
  for (std::int64_t k = 0; k < 3; ++k) {
    const auto m = rotation_mapping(3, 3, k);
    ASSERT_EQ(m.size(), 3u);
    std::set<std::size_t> sets_this_checkpoint;
    for (std::size_t b = 0; b < 3; ++b) {
      ASSERT_TRUE(m[b]);
      seen[b].insert(*m[b]);
      sets_this_checkpoint.insert(*m[b]);
    }
    EXPECT_EQ(sets_this_checkpoint.size(), 3u);
  }
  for (const auto& [b, sets] : seen) EXPECT_EQ(sets.size(), 3u);
}

TEST(Rotation, SingleBucketNeverRotates) {
  const auto first = rotation_mapping(1, 3, 0);
  for (std::int64_t k = 1; k < 10; ++k) EXPECT_EQ(rotation_mapping(1, 3, k), first);
}

TEST(Rotation, ThreeBucketsTwoSetsEachPairingTwiceInSix) {
  std::map<std::pair<std::size_t, std::size_t>, int> pairs;
  for (std::int64_t k = 0; k < 6; ++k) {
    const auto m = rotation_mapping(3, 2, k);
    for (std::size_t b = 0; b < 3; ++b) {
      if (m[b]) ++pairs[{b, *m[b]}];
    }
  }
  ASSERT_EQ(pairs.size(), 6u);
  for (const auto& [p, n] : pairs) EXPECT_EQ(n, 2);
}

TEST(Rotation, PartitionGroupsRoundRobin) {
  const auto sets = partition_groups(kSixGroups, 3);
  ASSERT_EQ(sets.size(), 3u);
  EXPECT_EQ(sets[0], (std::vector<std::string>{"g1", "g4"}));
  EXPECT_EQ(sets[2], (std::vector<std::string>{"g3", "g6"}));
}

TEST(Policy, CodecIsStrictAndRoundTrips) {
  EligibilityPolicy p;
  p.recurrence = Recurrence::allow_same_condition;
  p.trust_threshold = 0.8;
  EXPECT_EQ(policy_from_json(to_json(p)), p);
  Json bad = to_json(p);
  bad["recurrance"] = "allow-all";
  EXPECT_THROW(policy_from_json(bad), Error);
  QuotaConfig q;
  q.buckets = {{"VE", {"VE", "CO"}}};
  q.max_share = 0.2;
  q.enforcement = QuotaEnforcement::soft_rotate;
  EXPECT_EQ(quotas_from_json(to_json(q)), q);
}
