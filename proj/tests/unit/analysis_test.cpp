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

#include <boost/math/statistics/univariate_statistics.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "crowdctl/analysis/bias.hpp"
#include "crowdctl/analysis/robust.hpp"
#include "crowdctl/common/error.hpp"
#include "support.hpp"

using namespace crowdctl;
using namespace crowdctl::analysis;
using crowdctl::fixture::judgment;

namespace {

// Oracle: Boost.Math median, MAD as the median of absolute deviations.
// Boost 1.74's median_absolute_deviation returns |x| of the middle element
// instead of its deviation when the center is non-zero, so it is not used.
double oracle_z(double x, std::vector<double> ref) {
  const double med = boost::math::statistics::median(ref);
  std::vector<double> dev;
  for (double v : ref) dev.push_back(std::abs(v - med));
  const double mad = boost::math::statistics::median(dev);
  return (x - med) / (1.4826 * mad);
}

// Oracle: textbook type-7 quantile written out by hand.
double oracle_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::vector<platform::Judgment> random_log(std::mt19937_64& rng, int workers, int max_parts) {
  const std::vector<std::string> groups = {"base", "bad", "good"};
  std::vector<platform::Judgment> log;
  int minute = 0;
  for (int w = 0; w < workers; ++w) {
    const int parts = 1 + static_cast<int>(rng() % max_parts);
    for (int p = 0; p < parts; ++p) {
      const auto g = groups[rng() % groups.size()];
      const auto block = "do:" + g + ":" + std::to_string(rng() % 2);
      const int judgments = 1 + static_cast<int>(rng() % 4);
      for (int k = 0; k < judgments; ++k) {
        auto j = judgment("w" + std::to_string(w), block, g, minute++, 5.0 + static_cast<double>(rng() % 50));
        j.country = std::string(1, static_cast<char>('A' + rng() % 6)) + "X";
        j.trusted = rng() % 10 != 0;
        j.valid = j.trusted;
        log.push_back(j);
      }
    }
  }
  return log;
}

const std::map<std::string, workflow::ConditionKind> kKinds = {
    {"base", workflow::ConditionKind::base},
    {"bad", workflow::ConditionKind::bad_support},
    {"good", workflow::ConditionKind::good_support}};

}  // namespace

TEST(RobustZ, FixtureMatchesBoostOracle) {
  const std::vector<double> ref = {10, 12, 14, 16, 18};
  const auto z = robust_z({20}, ref);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_NEAR(z[0], oracle_z(20, ref), 1e-9);
  // Recorded from an independent run of scipy.stats.median_abs_deviation.
  EXPECT_NEAR(z[0], 2.023472278429786, 1e-9);
}

TEST(RobustZ, MedianOfReferenceScoresZero) {
  EXPECT_DOUBLE_EQ(robust_z({14}, {10, 12, 14, 16, 18})[0], 0.0);
}

TEST(RobustZ, ConstantReferenceIsDegenerate) {
  EXPECT_EQ(error_code([] { robust_z({1}, {3, 3, 3, 3, 3}); }), errc::degenerate_reference);
}

TEST(RobustZ, SmallReferenceIsRejected) {
  EXPECT_EQ(error_code([] { robust_z({1}, {1, 2, 3, 4}); }), errc::invalid_argument);
}

TEST(RobustZ, RandomSamplesMatchOracleProperty) {
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> dist(3.0, 0.6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ref(5 + rng() % 60);
    for (auto& v : ref) v = dist(rng);
    std::vector<double> xs(10);
    for (auto& v : xs) v = dist(rng);
    const auto z = robust_z(xs, ref);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(z[i], oracle_z(xs[i], ref), 1e-9);
  }
}

TEST(RobustZ, SelfStandardizationHasMedianZeroAndUnitScaledMadProperty) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> dist(50.0, 9.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> ref(5 + rng() % 80);
    for (auto& v : ref) v = dist(rng);
    const auto z = robust_z(ref, ref);
    // Odd sizes hit the median element exactly; even sizes average two floats.
    if (ref.size() % 2 == 1) {
      EXPECT_EQ(median(z), 0.0);
    } else {
      EXPECT_NEAR(median(z), 0.0, 1e-12);
    }
    EXPECT_NEAR(kMadScale * mad(z), 1.0, 1e-9);
  }
}

TEST(RobustZ, AffineInvarianceProperty) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> ref(9), xs(4);
    for (auto& v : ref) v = dist(rng);
    for (auto& v : xs) v = dist(rng);
    const double a = 0.1 + dist(rng) / 10.0, b = dist(rng) - 50.0;
    auto ref2 = ref, xs2 = xs;
    for (auto& v : ref2) v = a * v + b;
    for (auto& v : xs2) v = a * v + b;
    const auto z1 = robust_z(xs, ref);
    const auto z2 = robust_z(xs2, ref2);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(z1[i], z2[i], 1e-8);
  }
}

TEST(Quantile, Type7MatchesHandOracleProperty) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng() % 30);
    for (auto& x : v) x = dist(rng);
    for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) EXPECT_NEAR(quantile(v, q), oracle_quantile(v, q), 1e-12);
    if (v.size() >= 5) {
      const double scale = (oracle_quantile(v, 0.75) - oracle_quantile(v, 0.25)) / kIqrScale;
      const double med = boost::math::statistics::median(v);
      EXPECT_NEAR(iqr_z({3.0}, v)[0], (3.0 - med) / scale, 1e-9);
    }
  }
}

TEST(CohortFractions, HandCountedExample) {
  // w1:[A], w2:[A,B], w3:[A,A]
  std::vector<platform::Judgment> log = {
      judgment("w1", "a1", "A", 0), judgment("w2", "a1", "A", 1), judgment("w2", "b1", "B", 2),
      judgment("w3", "a1", "A", 3), judgment("w3", "a2", "A", 4)};
  const auto f = cohort_fractions(log);
  EXPECT_DOUBLE_EQ(f.returning, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f.crossover, 1.0 / 3.0);
  EXPECT_EQ(f.workers, 3);
}

TEST(CohortFractions, SingleParticipationsGiveZero) {
  std::vector<platform::Judgment> log = {judgment("w1", "a1", "A", 0), judgment("w1", "a1", "A", 1),
                                         judgment("w2", "b1", "B", 2)};
  const auto f = cohort_fractions(log);
  EXPECT_EQ(f.returning, 0.0);
  EXPECT_EQ(f.crossover, 0.0);
}

TEST(CohortFractions, EmptyLogIsRejected) {
  EXPECT_EQ(error_code([] { cohort_fractions({}); }), errc::invalid_argument);
}

TEST(Dominance, CountryMixFromCounts) {
  const auto d = dominance_from_counts({{"VE", 285}, {"EG", 118}, {"UA", 78}, {"rest", 519}}, 3);
  // "rest" is the largest single entry here, so the top three are rest, VE, EG.
  EXPECT_NEAR(d.top_k_share, (519.0 + 285 + 118) / 1000.0, 1e-12);
  EXPECT_EQ(d.shares[0].first, "rest");
  EXPECT_EQ(d.shares[1].first, "VE");
}

TEST(Dominance, DefaultCountryMixTopThree) {
  // Tail split so that no tail country outranks Ukraine.
  std::map<std::string, std::int64_t> counts = {{"VE", 285}, {"EG", 118}, {"UA", 78}};
  for (int i = 0; i < 9; ++i) counts["T" + std::to_string(i)] = 57;
  counts["T9"] = 519 - 9 * 57;
  const auto d = dominance_from_counts(counts, 3);
  EXPECT_NEAR(d.top_k_share, 0.481, 1e-12);
}

TEST(Dominance, UniformAndSingleCountry) {
  std::map<std::string, std::int64_t> uniform;
  for (int i = 0; i < 10; ++i) uniform["C" + std::to_string(i)] = 7;
  EXPECT_NEAR(dominance_from_counts(uniform, 3).top_k_share, 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(dominance_from_counts({{"VE", 12}}, 3).top_k_share, 1.0);
}

TEST(Dominance, SharesSumToOneProperty) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const auto log = random_log(rng, 20, 3);
    const auto d = dominance(log, 1 + static_cast<int>(rng() % 4));
    double sum = 0;
    for (const auto& [c, s] : d.shares) sum += s;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Discard, DropReturningHandCount) {
  std::vector<platform::Judgment> log = {judgment("w1", "a1", "A", 0), judgment("w2", "a1", "A", 1),
                                         judgment("w2", "b1", "B", 2)};
  const auto d = estimate_discard(log, {CleanupPolicy::drop_returning});
  EXPECT_EQ(d.discarded, 2);
  EXPECT_DOUBLE_EQ(d.fraction, 2.0 / 3.0);
  EXPECT_EQ(estimate_discard(log, {}).fraction, 0.0);
}

TEST(Discard, MonotoneInPolicySetProperty) {
  std::mt19937_64 rng(16);
  const std::vector<CleanupPolicy> all = {CleanupPolicy::drop_returning, CleanupPolicy::drop_crossover,
                                          CleanupPolicy::drop_untrusted};
  for (int trial = 0; trial < 50; ++trial) {
    const auto log = random_log(rng, 25, 3);
    for (unsigned mask = 0; mask < 8; ++mask) {
      std::set<CleanupPolicy> base;
      for (unsigned b = 0; b < 3; ++b) {
        if (mask & (1u << b)) base.insert(all[b]);
      }
      const double f = estimate_discard(log, base).fraction;
      for (const auto p : all) {
        auto more = base;
        more.insert(p);
        EXPECT_GE(estimate_discard(log, more).fraction, f);
      }
    }
  }
}

TEST(Cohorts, PartitionIsCompleteAndCrossoverWithinReturningProperty) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto log = random_log(rng, 30, 4);
    const auto parts = participations(log);
    const auto cohorts = classify(parts, log, kKinds);
    EXPECT_EQ(cohorts.size(), parts.size());
    ReportConfig cfg;
    cfg.group_kinds = kKinds;
    const auto rep = build_report(log, cfg);
    std::int64_t sum = 0;
    for (const auto& [c, n] : rep.cohort_sizes) sum += n;
    EXPECT_EQ(sum, rep.total_participations);
    EXPECT_EQ(static_cast<std::size_t>(rep.total_participations), parts.size());

    std::map<std::string, std::set<std::string>> groups;
    std::map<std::string, int> count;
    for (const auto& p : parts) {
      groups[p.worker_id].insert(p.group_id);
      ++count[p.worker_id];
    }
    for (const auto& [w, gs] : groups) {
      if (gs.size() >= 2) EXPECT_GE(count[w], 2) << w;
    }
    EXPECT_LE(rep.fractions.crossover, rep.fractions.returning);
  }
}

TEST(Cohorts, ClassifiesAgainstPreviousParticipation) {
  std::vector<platform::Judgment> log = {
      judgment("w1", "b1", "base", 0),  judgment("w1", "b2", "base", 1),  // returning-same
      judgment("w2", "x1", "bad", 2),   judgment("w2", "y1", "good", 3),  // bad-to-good
      judgment("w3", "y1", "good", 4),  judgment("w3", "b1", "base", 5),  // support-to-base
      judgment("w4", "b1", "base", 6),  judgment("w4", "x1", "bad", 7),   // base-to-support
      judgment("w5", "y1", "good", 8),  judgment("w5", "x1", "bad", 9)};  // crossover-other
  const auto parts = participations(log);
  const auto c = classify(parts, log, kKinds);
  std::vector<Cohort> expected = {Cohort::new_worker, Cohort::returning_same,  Cohort::new_worker,
                                  Cohort::bad_to_good, Cohort::new_worker,     Cohort::support_to_base,
                                  Cohort::new_worker, Cohort::base_to_support, Cohort::new_worker,
                                  Cohort::crossover_other};
  EXPECT_EQ(c, expected);
}

TEST(Cohorts, UntrustedWorkerIsUntrustedEverywhere) {
  std::vector<platform::Judgment> log = {judgment("w1", "b1", "base", 0), judgment("w1", "b1", "base", 1)};
  log[1].trusted = false;
  const auto parts = participations(log);
  EXPECT_EQ(classify(parts, log, kKinds), (std::vector<Cohort>{Cohort::untrusted}));
}

TEST(Report, SameLogGivesByteIdenticalReport) {
  std::mt19937_64 rng(18);
  const auto log = random_log(rng, 40, 3);
  ReportConfig cfg;
  cfg.group_kinds = kKinds;
  const auto a = build_report(log, cfg);
  const auto b = build_report(log, cfg);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(to_text(a), to_text(b));
  EXPECT_EQ(a.digest.size(), 64u);
  cfg.run_id = "other";
  cfg.generated_at = fixture::at_utc("2026-05-01T00:00:00.000Z");
  EXPECT_EQ(build_report(log, cfg).digest, a.digest);
}

TEST(Report, SmallCohortsAreFlaggedNotScored) {
  std::vector<platform::Judgment> log;
  for (int i = 0; i < 8; ++i) log.push_back(judgment("n" + std::to_string(i), "b1", "base", i, 10.0 + i));
  log.push_back(judgment("n0", "b2", "base", 20, 5.0));
  ReportConfig cfg;
  cfg.group_kinds = kKinds;
  const auto rep = build_report(log, cfg);
  for (const auto& s : rep.z_summaries) {
    if (s.cohort == Cohort::returning_same && s.metric == Metric::decision_time) {
      EXPECT_EQ(s.n, 1);
      EXPECT_FALSE(s.median_z.has_value());
      EXPECT_NE(std::find(s.flags.begin(), s.flags.end(), "insufficient-n"), s.flags.end());
    }
  }
}

TEST(Report, EmptyLogIsRejected) {
  EXPECT_EQ(error_code([] { build_report({}, {}); }), errc::invalid_argument);
}
