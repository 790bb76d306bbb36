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

#include "crowdctl/analysis/bias.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"

namespace crowdctl::analysis {

using platform::Judgment;
using workflow::ConditionKind;

const char* const kValidContributionDefinition =
    "valid contributions: judgments from trusted, policy-compliant workers in their first "
    "participation (the new cohort); they form the z-score reference population";

namespace {

std::string worker_of(const Judgment& j) {
  return j.canonical_worker_id.empty() ? j.platform_worker_id : j.canonical_worker_id;
}

void require_nonempty(const std::vector<Judgment>& log) {
  if (log.empty()) throw Error(errc::invalid_argument, "empty judgment log");
}

ConditionKind kind_of(const std::map<std::string, ConditionKind>& kinds, const std::string& g) {
  auto it = kinds.find(g);
  return it == kinds.end() ? ConditionKind::unspecified : it->second;
}

struct WorkerSummary {
  std::set<std::string> blocks;
  std::set<std::string> groups;
};

std::map<std::string, WorkerSummary> summarize_workers(const std::vector<Judgment>& log) {
  std::map<std::string, WorkerSummary> out;
  for (const auto& j : log) {
    auto& w = out[worker_of(j)];
    w.blocks.insert(j.block_id);
    w.groups.insert(j.group_id);
  }
  return out;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<Participation> participations(const std::vector<Judgment>& log) {
  std::vector<std::string> worker_order;
  std::unordered_map<std::string, std::vector<Participation>> by_worker;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;  // (worker, block) -> index
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& j = log[i];
    const std::string w = worker_of(j);
    auto [it, fresh_worker] = by_worker.try_emplace(w);
    if (fresh_worker) worker_order.push_back(w);
    auto [s, fresh] = slot.try_emplace({w, j.block_id}, it->second.size());
    if (fresh) {
      Participation p;
      p.worker_id = w;
      p.block_id = j.block_id;
      p.group_id = j.group_id;
      p.first_at = j.submitted_at;
      it->second.push_back(std::move(p));
    }
    auto& p = it->second[s->second];
    p.first_at = std::min(p.first_at, j.submitted_at);
    p.judgments.push_back(i);
  }
  std::vector<Participation> out;
  for (const auto& w : worker_order) {
    auto& parts = by_worker[w];
    std::stable_sort(parts.begin(), parts.end(), [](const Participation& a, const Participation& b) {
      return a.first_at < b.first_at;
    });
    for (std::size_t k = 0; k < parts.size(); ++k) {
      parts[k].ordinal = static_cast<int>(k);
      out.push_back(std::move(parts[k]));
    }
  }
  return out;
}

CohortFractions cohort_fractions(const std::vector<Judgment>& log) {
  require_nonempty(log);
  const auto workers = summarize_workers(log);
  std::int64_t returning = 0;
  std::int64_t crossover = 0;
  for (const auto& [_, w] : workers) {
    if (w.blocks.size() >= 2) ++returning;
    if (w.groups.size() >= 2) ++crossover;
  }
  CohortFractions f;
  f.workers = static_cast<std::int64_t>(workers.size());
  f.returning = static_cast<double>(returning) / static_cast<double>(f.workers);
  f.crossover = static_cast<double>(crossover) / static_cast<double>(f.workers);
  return f;
}

Dominance dominance_from_counts(const std::map<std::string, std::int64_t>& counts, int k) {
  if (k < 1) throw Error(errc::invalid_argument, "k must be at least 1");
  std::int64_t total = 0;
  for (const auto& [_, n] : counts) total += n;
  Dominance d;
  d.k = k;
  if (total == 0) return d;
  for (const auto& [c, n] : counts) {
    d.shares.emplace_back(c, static_cast<double>(n) / static_cast<double>(total));
  }
  std::stable_sort(d.shares.begin(), d.shares.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (int i = 0; i < k && i < static_cast<int>(d.shares.size()); ++i) {
    d.top_k_share += d.shares[static_cast<std::size_t>(i)].second;
  }
  return d;
}

Dominance dominance(const std::vector<Judgment>& log, int k) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& j : log) {
    if (j.country.empty()) {
      throw Error(errc::invalid_argument, "judgment on unit " + j.unit_id + " has no country");
    }
    ++counts[j.country];
  }
  return dominance_from_counts(counts, k);
}

std::string_view to_string(CleanupPolicy p) {
  switch (p) {
    case CleanupPolicy::drop_returning: return "drop-returning";
    case CleanupPolicy::drop_crossover: return "drop-crossover";
    case CleanupPolicy::drop_untrusted: return "drop-untrusted";
  }
  return "drop-returning";
}

CleanupPolicy cleanup_policy_from_string(std::string_view s) {
  if (s == "drop-returning") return CleanupPolicy::drop_returning;
  if (s == "drop-crossover") return CleanupPolicy::drop_crossover;
  if (s == "drop-untrusted") return CleanupPolicy::drop_untrusted;
  throw Error(errc::invalid_argument, "unknown cleanup policy '" + std::string(s) + "'");
}

DiscardEstimate estimate_discard(const std::vector<Judgment>& log,
                                 const std::set<CleanupPolicy>& policies) {
  DiscardEstimate out;
  out.total = static_cast<std::int64_t>(log.size());
  if (log.empty()) return out;
  const auto workers = summarize_workers(log);
  auto matches = [&](const Judgment& j, CleanupPolicy p) {
    switch (p) {
      case CleanupPolicy::drop_returning: return workers.at(worker_of(j)).blocks.size() >= 2;
      case CleanupPolicy::drop_crossover: return workers.at(worker_of(j)).groups.size() >= 2;
      case CleanupPolicy::drop_untrusted: return !j.trusted;
    }
    return false;
  };
  std::map<CleanupPolicy, std::int64_t> per;
  for (const auto& j : log) {
    bool any = false;
    for (auto p : policies) {
      if (matches(j, p)) {
        ++per[p];
        any = true;
      }
    }
    if (any) ++out.discarded;
  }
  const double total = static_cast<double>(out.total);
  out.fraction = static_cast<double>(out.discarded) / total;
  for (auto p : policies) out.per_policy[std::string(to_string(p))] = static_cast<double>(per[p]) / total;
  return out;
}

std::string_view to_string(Cohort c) {
  switch (c) {
    case Cohort::new_worker: return "new";
    case Cohort::returning_same: return "returning-same";
    case Cohort::support_to_base: return "support-to-base";
    case Cohort::base_to_support: return "base-to-support";
    case Cohort::bad_to_good: return "bad-to-good";
    case Cohort::crossover_other: return "crossover-other";
    case Cohort::untrusted: return "untrusted";
  }
  return "new";
}

std::vector<Cohort> classify(const std::vector<Participation>& parts, const std::vector<Judgment>& log,
                             const std::map<std::string, ConditionKind>& group_kinds) {
  std::map<std::string, std::size_t> last;  // worker -> index of latest judgment
  for (std::size_t i = 0; i < log.size(); ++i) last[worker_of(log[i])] = i;

  std::vector<Cohort> out;
  out.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (!log[last.at(p.worker_id)].trusted) {
      out.push_back(Cohort::untrusted);
      continue;
    }
    if (p.ordinal == 0) {
      out.push_back(Cohort::new_worker);
      continue;
    }
    // Participations of one worker are contiguous and ordered.
    const auto& prev = parts[i - 1];
    const ConditionKind from = kind_of(group_kinds, prev.group_id);
    const ConditionKind to = kind_of(group_kinds, p.group_id);
    if (prev.group_id == p.group_id) {
      out.push_back(Cohort::returning_same);
    } else if (workflow::is_support(from) && to == ConditionKind::base) {
      out.push_back(Cohort::support_to_base);
    } else if (from == ConditionKind::base && workflow::is_support(to)) {
      out.push_back(Cohort::base_to_support);
    } else if (from == ConditionKind::bad_support && to == ConditionKind::good_support) {
      out.push_back(Cohort::bad_to_good);
    } else {
      out.push_back(Cohort::crossover_other);
    }
  }
  return out;
}

std::vector<WorkerAccuracy> worker_accuracies(const std::vector<Judgment>& log) {
  const auto workers = summarize_workers(log);
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> gold;  // worker -> (correct, total)
  for (const auto& j : log) {
    if (!j.is_gold) continue;
    auto& g = gold[worker_of(j)];
    ++g.second;
    if (j.gold_correct.value_or(false)) ++g.first;
  }
  std::vector<WorkerAccuracy> out;
  for (const auto& [w, g] : gold) {
    WorkerAccuracy a;
    a.worker_id = w;
    a.returning = workers.at(w).blocks.size() >= 2;
    a.gold = g.second;
    a.accuracy = static_cast<double>(g.first) / static_cast<double>(g.second);
    out.push_back(std::move(a));
  }
  return out;
}

std::string_view to_string(Metric m) {
  return m == Metric::decision_time ? "decision-time" : "accuracy";
}

namespace {

struct Sample {
  std::string group;
  double value = 0.0;
};

void add_flag(ZScoreSummary& s, const std::string& f) {
  if (std::find(s.flags.begin(), s.flags.end(), f) == s.flags.end()) s.flags.push_back(f);
}

// Standardizes `values` against `reference`, falling back to IQR scaling.
// Returns nothing when neither scaling works.
std::optional<std::vector<double>> standardize(const std::vector<double>& values,
                                               const std::vector<double>& reference, double scale,
                                               ZScoreSummary& s) {
  if (reference.size() < kMinReference) {
    add_flag(s, "insufficient-reference");
    return std::nullopt;
  }
  try {
    return robust_z(values, reference, scale);
  } catch (const Error& e) {
    if (e.code() != errc::degenerate_reference) throw;
  }
  add_flag(s, "degenerate-reference");
  try {
    auto z = iqr_z(values, reference);
    s.scaling = "iqr-fallback";
    return z;
  } catch (const Error& e) {
    if (e.code() != errc::degenerate_reference) throw;
  }
  s.scaling = "none";
  return std::nullopt;
}

ZScoreSummary summarize(Cohort cohort, Metric metric, const std::vector<Sample>& values,
                        const std::vector<Sample>& reference, const ReportConfig& cfg) {
  ZScoreSummary s;
  s.cohort = cohort;
  s.metric = metric;
  s.n = static_cast<std::int64_t>(values.size());
  if (values.size() < kMinReference) {
    add_flag(s, "insufficient-n");
    return s;
  }
  std::vector<double> z;
  if (!cfg.per_condition) {
    std::vector<double> v, r;
    for (const auto& x : values) v.push_back(x.value);
    for (const auto& x : reference) r.push_back(x.value);
    if (auto out = standardize(v, r, cfg.mad_scale, s)) z = std::move(*out);
  } else {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_group;
    for (const auto& x : values) by_group[x.group].first.push_back(x.value);
    for (const auto& x : reference) {
      if (auto it = by_group.find(x.group); it != by_group.end()) it->second.second.push_back(x.value);
    }
    for (const auto& [g, vr] : by_group) {
      if (auto out = standardize(vr.first, vr.second, cfg.mad_scale, s)) {
        z.insert(z.end(), out->begin(), out->end());
      } else {
        add_flag(s, "group-skipped:" + g);
      }
    }
  }
  if (z.empty()) return s;
  s.median_z = median(z);
  s.iqr = iqr(z);
  return s;
}

Json to_json(const ZScoreSummary& s) {
  Json j{{"cohort", to_string(s.cohort)},
         {"metric", to_string(s.metric)},
         {"n", s.n},
         {"scaling", s.scaling},
         {"flags", s.flags}};
  j["medianZ"] = s.median_z ? Json(*s.median_z) : Json(nullptr);
  j["iqr"] = s.iqr ? Json(*s.iqr) : Json(nullptr);
  return j;
}

Json body_json(const BiasReport& r) {
  Json shares = Json::array();
  for (const auto& [c, v] : r.dominance.shares) shares.push_back(Json{{"country", c}, {"share", v}});
  Json cohorts = Json::array();
  for (auto c : kAllCohorts) {
    auto it = r.cohort_sizes.find(c);
    cohorts.push_back(
        Json{{"cohort", to_string(c)}, {"participations", it == r.cohort_sizes.end() ? 0 : it->second}});
  }
  Json z = Json::array();
  for (const auto& s : r.z_summaries) z.push_back(to_json(s));
  return Json{
      {"reportVersion", kReportVersion},
      {"validContributions", kValidContributionDefinition},
      {"totals",
       {{"judgments", r.total_judgments},
        {"workers", r.total_workers},
        {"participations", r.total_participations}}},
      {"returningFraction", r.fractions.returning},
      {"crossoverFraction", r.fractions.crossover},
      {"dominance", {{"k", r.dominance.k}, {"topKShare", r.dominance.top_k_share}, {"shares", shares}}},
      {"cohorts", cohorts},
      {"zScores", z},
      {"discard",
       {{"policies", r.discard_policies},
        {"fraction", r.discard.fraction},
        {"discarded", r.discard.discarded},
        {"total", r.discard.total},
        {"perPolicy", r.discard.per_policy}}},
      {"balance", scheduler::to_json(r.balance)},
      {"groupJudgments", r.group_judgments},
      {"settings",
       {{"perCondition", r.per_condition}, {"madScale", r.mad_scale}, {"topK", r.dominance.k}}},
  };
}

}  // namespace

BiasReport build_report(const std::vector<Judgment>& log, const ReportConfig& cfg) {
  require_nonempty(log);
  BiasReport r;
  r.run_id = cfg.run_id;
  r.generated_at = cfg.generated_at;
  r.per_condition = cfg.per_condition;
  r.mad_scale = cfg.mad_scale;
  r.total_judgments = static_cast<std::int64_t>(log.size());
  r.fractions = cohort_fractions(log);
  r.total_workers = r.fractions.workers;
  r.dominance = dominance(log, cfg.top_k);
  r.discard = estimate_discard(log, cfg.cleanup);
  for (auto p : cfg.cleanup) r.discard_policies.emplace_back(to_string(p));
  for (const auto& j : log) ++r.group_judgments[j.group_id];
  if (!cfg.window_counts.empty()) r.balance = scheduler::window_balance(cfg.window_counts);

  const auto parts = participations(log);
  const auto cohorts = classify(parts, log, cfg.group_kinds);
  r.total_participations = static_cast<std::int64_t>(parts.size());

  std::map<Cohort, std::vector<Sample>> times, accuracy;
  std::vector<Sample> ref_times, ref_accuracy;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    const Cohort c = cohorts[i];
    ++r.cohort_sizes[c];
    std::int64_t gold = 0;
    std::int64_t correct = 0;
    bool all_valid = true;
    for (std::size_t k : p.judgments) {
      const auto& j = log[k];
      times[c].push_back({p.group_id, j.decision_time_s});
      if (c == Cohort::new_worker && j.valid) ref_times.push_back({p.group_id, j.decision_time_s});
      all_valid = all_valid && j.valid;
      if (j.is_gold) {
        ++gold;
        if (j.gold_correct.value_or(false)) ++correct;
      }
    }
    if (gold == 0) continue;
    const double acc = static_cast<double>(correct) / static_cast<double>(gold);
    accuracy[c].push_back({p.group_id, acc});
    if (c == Cohort::new_worker && all_valid) ref_accuracy.push_back({p.group_id, acc});
  }
  for (auto c : kAllCohorts) {
    r.z_summaries.push_back(summarize(c, Metric::decision_time, times[c], ref_times, cfg));
    r.z_summaries.push_back(summarize(c, Metric::accuracy, accuracy[c], ref_accuracy, cfg));
  }
  r.digest = sha256_hex(body_json(r).dump());
  return r;
}

Json to_json(const BiasReport& r) {
  Json j = body_json(r);
  j["runId"] = r.run_id;
  j["generatedAt"] = r.generated_at ? Json(format_utc(*r.generated_at)) : Json(nullptr);
  j["digest"] = r.digest;
  return j;
}

std::string to_text(const BiasReport& r) {
  std::ostringstream os;
  os << "crowdctl bias report v" << kReportVersion << "\n";
  if (!r.run_id.empty()) os << "run: " << r.run_id << "\n";
  if (r.generated_at) os << "generated: " << format_utc(*r.generated_at) << "\n";
  os << kValidContributionDefinition << "\n";
  os << "z-scores: " << (r.per_condition ? "per condition, then pooled" : "pooled") << ", MAD x "
     << fmt(r.mad_scale) << "\n\n";
  os << "judgments " << r.total_judgments << ", workers " << r.total_workers << ", participations "
     << r.total_participations << "\n";
  os << "returning fraction " << fmt(r.fractions.returning) << ", crossover fraction "
     << fmt(r.fractions.crossover) << "\n";
  os << "top-" << r.dominance.k << " country share " << fmt(r.dominance.top_k_share);
  for (int i = 0; i < r.dominance.k && i < static_cast<int>(r.dominance.shares.size()); ++i) {
    const auto& [c, v] = r.dominance.shares[static_cast<std::size_t>(i)];
    os << (i == 0 ? " (" : ", ") << c << " " << fmt(v);
    if (i + 1 == r.dominance.k || i + 1 == static_cast<int>(r.dominance.shares.size())) os << ")";
  }
  os << "\n";
  os << "discarded under";
  for (const auto& p : r.discard_policies) os << " " << p;
  if (r.discard_policies.empty()) os << " no policy";
  os << ": " << fmt(r.discard.fraction) << " (" << r.discard.discarded << "/" << r.discard.total
     << ")\n";
  if (!r.balance.groups.empty()) os << "window balance score " << fmt(r.balance.score) << "\n";
  os << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %-14s %7s %9s %9s  %s\n", "cohort", "metric", "n",
                "median-z", "iqr", "notes");
  os << line;
  for (const auto& s : r.z_summaries) {
    std::string notes = s.scaling == "mad" ? "" : s.scaling;
    for (const auto& f : s.flags) notes += (notes.empty() ? "" : ",") + f;
    std::snprintf(line, sizeof line, "%-16s %-14s %7lld %9s %9s  %s\n",
                  std::string(to_string(s.cohort)).c_str(), std::string(to_string(s.metric)).c_str(),
                  static_cast<long long>(s.n), s.median_z ? fmt(*s.median_z, 3).c_str() : "-",
                  s.iqr ? fmt(*s.iqr, 3).c_str() : "-", notes.c_str());
    os << line;
  }
  os << "\ndigest " << r.digest << "\n";
  return os.str();
}

}  // namespace crowdctl::analysis
