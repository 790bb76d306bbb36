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

// Headless acceptance suite: one PASS/FAIL line per criterion, exit status 1
// when any criterion fails. Runs entirely on the simulator and core library.

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/statistics/univariate_statistics.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "crowdctl/analysis/bias.hpp"
#include "crowdctl/analysis/robust.hpp"
#include "crowdctl/orchestrator/simulation.hpp"
#include "crowdctl/orchestrator/workloads.hpp"
#include "crowdctl/platform/population.hpp"
#include "crowdctl/scheduler/schedule.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workers/manager.hpp"
#include "crowdctl/workers/quota.hpp"
#include "crowdctl/workflow/factorial.hpp"

using namespace crowdctl;
using Wall = std::chrono::steady_clock;

namespace {

constexpr int kSeeds = 20;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Wall::time_point t0) {
  return std::chrono::duration<double>(Wall::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double mean(const std::vector<double>& v) { return boost::math::statistics::mean(v); }

struct Welch {
  double diff = 0.0;  // mean(a) - mean(b)
  double se = 0.0;
  double df = 0.0;
};

Welch welch(const std::vector<double>& a, const std::vector<double>& b) {
  const double va = boost::math::statistics::sample_variance(a) / static_cast<double>(a.size());
  const double vb = boost::math::statistics::sample_variance(b) / static_cast<double>(b.size());
  Welch w;
  w.diff = mean(a) - mean(b);
  w.se = std::sqrt(va + vb);
  w.df = (va + vb) * (va + vb) /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  return w;
}

// Uncontrolled highlight-study runs shared by several criteria.
struct Uncontrolled {
  std::vector<std::vector<platform::Judgment>> logs;
  std::map<std::string, workflow::ConditionKind> kinds;
  double seconds = 0.0;
};

const Uncontrolled& uncontrolled() {
  static const Uncontrolled u = [] {
    Uncontrolled out;
    const auto w = orchestrator::highlight_study();
    for (const auto& g : w.def.groups) out.kinds[g.id] = g.kind;
    const auto t0 = Wall::now();
    for (int seed = 1; seed <= kSeeds; ++seed) {
      orchestrator::SimulationConfig cfg;
      cfg.def = w.def;
      cfg.units = w.units;
      cfg.profile = platform::default_profile();
      cfg.toggles = engine::Toggles{false, false, false};
      cfg.seed = static_cast<std::uint64_t>(seed);
      out.logs.push_back(orchestrator::run_simulation(cfg).judgments);
    }
    out.seconds = seconds_since(t0);
    return out;
  }();
  return u;
}

Verdict factorial_expansion() {
  const auto t0 = Wall::now();
  workflow::FactorialDesign design{{{"dataset", {"d1", "d2", "d3"}},
                                    {"size", {"short", "medium", "long"}},
                                    {"condition", {"c1", "c2", "c3", "c4", "c5", "c6"}}}};
  const auto x = workflow::expand_factorial(design, orchestrator::highlight_template());
  const double secs = seconds_since(t0);
  std::set<std::string> groups;
  std::size_t do_blocks = 0;
  for (const auto& b : x.blocks) {
    if (const auto* d = b.as_do()) {
      ++do_blocks;
      groups.insert(d->group);
    }
  }
  return {do_blocks == 54 && groups.size() == 54 && secs < 1.0,
          std::to_string(do_blocks) + " Do blocks, " + std::to_string(groups.size()) + " groups, " +
              fmt(secs, 3) + " s"};
}

Verdict crash_and_rerun() {
  const auto w = orchestrator::crash_workload();
  const auto dir = std::filesystem::temp_directory_path() / "crowdctl-acceptance";
  std::filesystem::create_directories(dir);
  auto fresh_path = [&] {
    const auto p = dir / ("crash-" + std::to_string(::getpid()) + ".db");
    for (const auto* suffix : {"", "-wal", "-shm"}) std::filesystem::remove(p.string() + suffix);
    return p.string();
  };
  auto config = [&] {
    orchestrator::SimulationConfig cfg;
    cfg.def = w.def;
    cfg.units = w.units;
    cfg.profile = platform::default_profile();
    cfg.seed = 5;
    cfg.store_path = fresh_path();
    return cfg;
  };
  auto judgment_set = [](const std::vector<platform::Judgment>& js) {
    std::vector<std::string> out;
    for (const auto& j : js) out.push_back(platform::to_json(j).dump());
    std::sort(out.begin(), out.end());
    return out;
  };

  const auto clean = orchestrator::run_simulation(config());
  if (clean.status != store::RunStatus::completed) return {false, "crash-free run did not complete"};
  const auto expected = judgment_set(clean.judgments);
  const std::int64_t boundaries = clean.fault_boundaries;

  // Every boundary once, then runs that crash twice (the second time while
  // recovering from the first) until 100 crash points are injected.
  std::vector<std::set<std::int64_t>> plans;
  std::size_t injected = 0;
  for (std::int64_t b = 1; b <= boundaries && injected < 100; ++b, ++injected) plans.push_back({b});
  for (std::int64_t b = 1; injected + 2 <= 100; b += 3, injected += 2) {
    plans.push_back({b, b + 1 + (b * 7) % 5});
  }
  int violations = 0;
  std::size_t crashes = 0;
  std::string first;
  auto violate = [&](const std::set<std::int64_t>& plan, const std::string& why) {
    if (violations++ == 0) {
      std::string at;
      for (const auto p : plan) at += (at.empty() ? "" : "+") + std::to_string(p);
      first = "boundary " + at + ": " + why;
    }
  };
  for (const auto& plan : plans) {
    auto cfg = config();
    cfg.crash_at = plan;
    const auto r = orchestrator::run_simulation(cfg);
    crashes += r.crash_points.size();
    if (r.crash_points.size() != plan.size()) violate(plan, "crash not injected");
    if (r.status != store::RunStatus::completed) violate(plan, "run did not complete");
    for (const auto& [block, n] : r.publish_calls) {
      if (n > 1) violate(plan, std::to_string(n) + " publishes for " + block);
    }
    if (judgment_set(r.judgments) != expected) violate(plan, "judgment set differs");
    if (!r.integrity_ok) violate(plan, "integrity check failed");
  }
  std::filesystem::remove_all(dir);
  return {violations == 0 && crashes == 100,
          std::to_string(crashes) + " crash points in " + std::to_string(plans.size()) + " runs over " +
              std::to_string(boundaries) + " boundaries, " + std::to_string(violations) + " violations" +
                               (first.empty() ? "" : " (" + first + ")")};
}

Verdict eligibility_soundness() {
  const auto& u = uncontrolled();
  const auto t0 = Wall::now();
  std::vector<double> returning, crossover;
  for (const auto& log : u.logs) {
    const auto f = analysis::cohort_fractions(log);
    returning.push_back(f.returning);
    crossover.push_back(f.crossover);
  }

  const auto w = orchestrator::highlight_study();
  orchestrator::SimulationConfig cfg;
  cfg.def = w.def;
  cfg.def.policy.recurrence = workers::Recurrence::block_all_repeats;
  cfg.units = w.units;
  cfg.profile = platform::default_profile();
  cfg.toggles = engine::Toggles{true, false, false};
  cfg.seed = 1;
  const auto controlled = orchestrator::run_simulation(cfg);
  std::int64_t returning_contributions = 0;
  for (const auto& part : analysis::participations(controlled.judgments)) {
    if (part.ordinal > 0) returning_contributions += static_cast<std::int64_t>(part.judgments.size());
  }
  const double secs = u.seconds + seconds_since(t0);
  const double r = mean(returning), c = mean(crossover);
  const bool ok = returning_contributions == 0 && std::abs(r - 0.38) <= 0.05 && std::abs(c - 0.30) <= 0.05 &&
                  secs < 60.0;
  return {ok, "controlled returning judgments " + std::to_string(returning_contributions) + " of " +
                  std::to_string(controlled.judgments.size()) + "; uncontrolled returning " + fmt(r) +
                  ", crossover " + fmt(c) + " (20 seeds); " + fmt(secs, 1) + " s"};
}

Verdict dominance_and_quotas() {
  std::vector<double> shares;
  for (const auto& log : uncontrolled().logs) shares.push_back(analysis::dominance(log, 3).top_k_share);
  const double top3 = mean(shares);

  const auto w = orchestrator::highlight_study();
  orchestrator::SimulationConfig cfg;
  cfg.def = w.def;
  cfg.units = w.units;
  cfg.profile = platform::default_profile();
  workers::QuotaConfig q;
  for (const auto& c : cfg.profile.countries) q.buckets.push_back({c.code, {c.code}});
  q.max_share = 0.15;
  q.enforcement = workers::QuotaEnforcement::hard_block;
  cfg.def.quotas = q;
  cfg.toggles = engine::Toggles{false, true, false};
  cfg.seed = 1;
  const auto r = orchestrator::run_simulation(cfg);
  std::map<std::string, std::int64_t> counts;
  for (const auto& j : r.judgments) ++counts[workers::bucket_of(q, j.country)];
  const double total = static_cast<double>(r.judgments.size());
  double worst = 0.0;
  std::string worst_bucket;
  for (const auto& [bucket, n] : counts) {
    const double s = static_cast<double>(n) / total;
    if (s > worst) {
      worst = s;
      worst_bucket = bucket;
    }
  }
  const bool ok = std::abs(top3 - 0.48) <= 0.05 && total > 0 && worst <= 0.15 + 1.0 / total;
  return {ok, "uncontrolled top-3 share " + fmt(top3) + " (20 seeds); capped run max bucket share " + fmt(worst) +
                  " (" + worst_bucket + ") over " + std::to_string(r.judgments.size()) + " judgments"};
}

Verdict discard_estimate() {
  std::vector<double> fractions;
  for (const auto& log : uncontrolled().logs) {
    fractions.push_back(analysis::estimate_discard(log, {analysis::CleanupPolicy::drop_returning}).fraction);
  }
  const double f = mean(fractions);
  return {std::abs(f - 0.38) <= 0.06, "drop-returning discards " + fmt(f) + " (20 seeds)"};
}

Verdict cohort_directions() {
  const auto& u = uncontrolled();
  int same_ok = 0, bad_good_ok = 0;
  std::vector<double> same_z, bad_good_z;
  std::vector<double> acc_returning, acc_new, time_returning, time_new;
  for (const auto& log : u.logs) {
    analysis::ReportConfig cfg;
    cfg.group_kinds = u.kinds;
    const auto rep = analysis::build_report(log, cfg);
    for (const auto& s : rep.z_summaries) {
      if (s.metric != analysis::Metric::decision_time || !s.median_z) continue;
      if (s.cohort == analysis::Cohort::returning_same) {
        same_z.push_back(*s.median_z);
        same_ok += *s.median_z < 0;
      } else if (s.cohort == analysis::Cohort::bad_to_good) {
        bad_good_z.push_back(*s.median_z);
        bad_good_ok += *s.median_z > 0;
      }
    }
    for (const auto& wa : analysis::worker_accuracies(log)) {
      (wa.returning ? acc_returning : acc_new).push_back(wa.accuracy);
    }
    std::map<std::string, int> parts;
    for (const auto& p : analysis::participations(log)) ++parts[p.worker_id];
    for (const auto& j : log) {
      const auto& id = j.canonical_worker_id.empty() ? j.platform_worker_id : j.canonical_worker_id;
      (parts[id] >= 2 ? time_returning : time_new).push_back(j.decision_time_s);
    }
  }

  // Equivalence of per-worker accuracy within 2 points: two one-sided
  // Welch tests at alpha 0.01.
  constexpr double kMargin = 0.02, kAlpha = 0.01;
  const auto acc = welch(acc_returning, acc_new);
  const boost::math::students_t acc_t(acc.df);
  const double p_lower = boost::math::cdf(boost::math::complement(acc_t, (acc.diff + kMargin) / acc.se));
  const double p_upper = boost::math::cdf(acc_t, (acc.diff - kMargin) / acc.se);
  const double p_equiv = std::max(p_lower, p_upper);

  // Decision time differs: two-sided Welch test at alpha 0.01.
  const auto dt = welch(time_returning, time_new);
  const boost::math::students_t dt_t(dt.df);
  const double p_time = 2 * boost::math::cdf(boost::math::complement(dt_t, std::abs(dt.diff) / dt.se));

  const bool ok = same_ok == kSeeds && bad_good_ok == kSeeds && p_equiv < kAlpha && p_time < kAlpha;
  return {ok, "returning-same z<0 in " + std::to_string(same_ok) + "/20 seeds (mean " +
                  fmt(same_z.empty() ? NAN : mean(same_z)) + "), bad->good z>0 in " + std::to_string(bad_good_ok) +
                  "/20 (mean " + fmt(bad_good_z.empty() ? NAN : mean(bad_good_z)) + "); accuracy diff " +
                  fmt(acc.diff * 100, 2) + " pp, equivalence p " + fmt(p_equiv, 6) + "; decision time diff " +
                  fmt(dt.diff, 2) + " s, p " + fmt(p_time, 6)};
}

Verdict assignment_balance() {
  store::Store st(":memory:");
  ManualClock clock(orchestrator::default_sim_start());
  workers::WorkerManager wm(st, clock);
  workers::RunContext c;
  c.run_id = "balance";
  for (int g = 1; g <= 6; ++g) {
    c.groups.push_back("g" + std::to_string(g));
    c.blocks_by_group["g" + std::to_string(g)] = {"do:g" + std::to_string(g)};
  }
  c.seed = 2026;
  wm.register_run(c);
  std::map<std::string, std::int64_t> counts;
  for (const auto& g : c.groups) counts[g] = 0;
  std::int64_t worst = 0;
  for (int i = 0; i < 10000; ++i) {
    ++counts[wm.assign_condition("balance", "w" + std::to_string(i))];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });
    worst = std::max(worst, hi->second - lo->second);
  }
  return {worst <= 1, "10000 assignments to 6 groups, max prefix spread " + std::to_string(worst)};
}

Verdict scheduler_gating() {
  const auto w = orchestrator::highlight_study();
  scheduler::Schedule s;
  s.windows = {scheduler::TimeWindow{{}, 10, 14}, scheduler::TimeWindow{{}, 22, 2}};
  s.checkpoint_every.judgments = 50;
  auto run = [&](bool balance) {
    orchestrator::SimulationConfig cfg;
    cfg.def = w.def;
    cfg.def.schedule = s;
    cfg.def.schedule->balance_across_groups = balance;
    cfg.units = w.units;
    cfg.profile = orchestrator::two_country_profile();
    cfg.toggles = engine::Toggles{false, false, true};
    cfg.seed = 3;
    cfg.horizon = std::chrono::hours(24 * 21);
    return orchestrator::run_simulation(cfg).judgments;
  };
  // Counts per window and group, recomputed from the judgments.
  auto balance_of = [&](const std::vector<platform::Judgment>& log, std::int64_t& outside) {
    std::vector<std::map<std::string, std::int64_t>> counts(scheduler::window_count(s));
    for (const auto& g : w.def.groups) {
      for (auto& m : counts) m[g.id] = 0;
    }
    for (const auto& j : log) {
      const auto idx = scheduler::window_index(s, j.submitted_at);
      if (!idx) {
        ++outside;
        continue;
      }
      ++counts[*idx][j.group_id];
    }
    return scheduler::window_balance(counts).score;
  };
  std::int64_t outside_on = 0, outside_off = 0;
  const auto on = run(true);
  const auto off = run(false);
  const double score_on = balance_of(on, outside_on);
  const double score_off = balance_of(off, outside_off);
  const bool ok = !on.empty() && !off.empty() && outside_on == 0 && outside_off == 0 && score_on < score_off;
  return {ok, std::to_string(outside_on + outside_off) + " judgments outside windows; balance score " +
                  fmt(score_on) + " with balancing vs " + fmt(score_off) + " without (" +
                  std::to_string(on.size()) + " / " + std::to_string(off.size()) + " judgments)"};
}

Verdict concurrency() {
  int violations = 0;
  for (int repeat = 0; repeat < 50; ++repeat) {
    store::Store st(":memory:");
    ManualClock clock(orchestrator::default_sim_start());
    workers::WorkerManager wm(st, clock);
    workers::RunContext c;
    c.run_id = "race";
    c.groups = {"g1", "g2"};
    c.blocks_by_group = {{"g1", {"a"}}, {"g2", {"b"}}};
    c.seed = static_cast<std::uint64_t>(repeat);
    wm.register_run(c);
    std::atomic<int> proceeds{0};
    std::atomic<bool> go{false};
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i) {
      threads.emplace_back([&, i] {
        while (!go.load()) std::this_thread::yield();
        const auto d = wm.decide_eligibility("race", "p" + std::to_string(i), "one-fingerprint", "VE",
                                             i % 2 ? "a" : "b");
        if (d.action == workers::Action::proceed) ++proceeds;
      });
    }
    go.store(true);
    for (auto& t : threads) t.join();
    violations += proceeds.load() != 1;
  }
  return {violations == 0, "50 rounds of 100 concurrent requests, " + std::to_string(violations) + " violations"};
}

Verdict analysis_oracle() {
  const std::vector<double> ref = {10, 12, 14, 16, 18};
  const double z = analysis::robust_z({20.0}, ref).front();
  // Independent oracle: Boost median of the reference and of the absolute
  // deviations around it.
  std::vector<double> r = ref;
  const double med = boost::math::statistics::median(r.begin(), r.end());
  std::vector<double> dev;
  for (double x : ref) dev.push_back(std::abs(x - med));
  const double mad = boost::math::statistics::median(dev.begin(), dev.end());
  const double oracle = (20.0 - med) / (analysis::kMadScale * mad);
  const bool ok = std::abs(z - oracle) <= 1e-9 && std::abs(z - 2.023472278429786) <= 1e-9;
  return {ok, "z(20) = " + fmt(z, 12) + ", oracle " + fmt(oracle, 12)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"factorial-expansion", factorial_expansion},
      {"crash-and-rerun", crash_and_rerun},
      {"eligibility-soundness", eligibility_soundness},
      {"dominance-and-quotas", dominance_and_quotas},
      {"discard-estimate", discard_estimate},
      {"cohort-directions", cohort_directions},
      {"assignment-balance", assignment_balance},
      {"scheduler-gating", scheduler_gating},
      {"concurrency", concurrency},
      {"analysis-oracle", analysis_oracle},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
