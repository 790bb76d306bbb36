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

#include "crowdctl/platform/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowdctl/common/error.hpp"

namespace crowdctl::platform {
namespace {

Diurnal normalized(Diurnal d) {
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / 24.0;
  if (mean > 0) {
    for (auto& x : d) x /= mean;
  }
  return d;
}

struct TailCountry {
  const char* code;
  int offset;
};

// Long tail after the three head countries, in descending weight.
constexpr TailCountry kTail[] = {
    {"IN", 5},  {"PH", 8},  {"ID", 7},  {"BR", -3}, {"US", -5}, {"RU", 3},  {"PK", 5},
    {"BD", 6},  {"NG", 1},  {"KE", 3},  {"MX", -6}, {"CO", -5}, {"TR", 3},  {"RS", 1},
    {"VN", 7},  {"GB", 0},  {"DE", 1},  {"ES", 1},  {"IT", 1},  {"PL", 1},  {"RO", 2},
    {"MA", 0},  {"TN", 1},  {"DZ", 1},  {"AR", -3}, {"PE", -5}, {"CL", -4}, {"LK", 5},
    {"NP", 6},  {"MY", 8}};

constexpr double kTailRatio = 0.88;

std::string kind_name(workflow::ConditionKind k) { return std::string(workflow::to_string(k)); }

int local_hour(int utc_hour, int offset) { return ((utc_hour + offset) % 24 + 24) % 24; }

}  // namespace

std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Diurnal default_diurnal() {
  return normalized({0.35, 0.25, 0.2, 0.2, 0.25, 0.35, 0.55, 0.8, 1.0, 1.1, 1.2, 1.2,
                     1.2,  1.2,  1.3, 1.3, 1.4,  1.5,  1.6,  1.7, 1.6, 1.4, 1.0, 0.6});
}

Diurnal day_only_diurnal() {
  Diurnal d{};
  for (int h = 8; h < 20; ++h) d[h] = 2.0;
  return d;
}

Diurnal flat_diurnal() {
  Diurnal d;
  d.fill(1.0);
  return d;
}

PopulationProfile default_profile(double arrivals_per_hour) {
  using workflow::ConditionKind;
  PopulationProfile p;
  const Diurnal shape = default_diurnal();
  p.countries.push_back({"VE", 0.285 * arrivals_per_hour, -4, shape});
  p.countries.push_back({"EG", 0.118 * arrivals_per_hour, 2, shape});
  p.countries.push_back({"UA", 0.078 * arrivals_per_hour, 2, shape});
  const double rest = 1.0 - 0.285 - 0.118 - 0.078;
  const auto n = static_cast<int>(std::size(kTail));
  const double first = rest * (1 - kTailRatio) / (1 - std::pow(kTailRatio, n));
  double w = first;
  for (const auto& c : kTail) {
    p.countries.push_back({c.code, w * arrivals_per_hour, c.offset, shape});
    w *= kTailRatio;
  }
  // Directions only: same-condition and support<->base crossings are faster,
  // bad->good crossings slower. Magnitudes are estimates.
  p.crossover_multipliers[{ConditionKind::support, ConditionKind::base}] = 0.8;
  p.crossover_multipliers[{ConditionKind::bad_support, ConditionKind::base}] = 0.8;
  p.crossover_multipliers[{ConditionKind::good_support, ConditionKind::base}] = 0.8;
  p.crossover_multipliers[{ConditionKind::base, ConditionKind::support}] = 0.8;
  p.crossover_multipliers[{ConditionKind::base, ConditionKind::bad_support}] = 0.8;
  p.crossover_multipliers[{ConditionKind::base, ConditionKind::good_support}] = 0.8;
  p.crossover_multipliers[{ConditionKind::bad_support, ConditionKind::good_support}] = 1.3;
  return p;
}

Json to_json(const PopulationProfile& p) {
  Json countries = Json::array();
  for (const auto& c : p.countries) {
    countries.push_back(Json{{"code", c.code},
                             {"weight", c.weight},
                             {"utcOffsetHours", c.utc_offset_hours},
                             {"diurnal", c.diurnal}});
  }
  Json groups = Json::object();
  for (const auto& [g, m] : p.group_multipliers) groups[g] = m;
  Json cross = Json::array();
  for (const auto& [k, m] : p.crossover_multipliers) {
    cross.push_back(Json{{"from", kind_name(k.first)}, {"to", kind_name(k.second)}, {"multiplier", m}});
  }
  return Json{{"countries", countries},
              {"returnProbability", p.return_probability},
              {"crossConditionProbability", p.cross_condition_probability},
              {"decisionTime", {{"medianSeconds", p.decision_time.median_s},
                                {"sigma", p.decision_time.sigma}}},
              {"groupMultipliers", groups},
              {"returningSameSpeedup", p.returning_same_speedup},
              {"crossoverMultipliers", cross},
              {"baseAccuracy", p.base_accuracy},
              {"fingerprintCollisionRate", p.fingerprint_collision_rate},
              {"seed", p.seed},
              {"pagesMin", p.pages_min},
              {"pagesMax", p.pages_max},
              {"returnDelayMeanHours", p.return_delay_mean_hours},
              {"pageGapSeconds", p.page_gap_s}};
}

PopulationProfile profile_from_json(const Json& j) {
  ObjectReader r(j, "profile");
  PopulationProfile p;
  for (const auto& cj : r.required_json("countries")) {
    ObjectReader cr(cj, "profile.countries[]");
    CountryProfile c;
    c.code = cr.required<std::string>("code");
    c.weight = cr.required<double>("weight");
    c.utc_offset_hours = cr.value_or<int>("utcOffsetHours", 0);
    const auto curve = cr.value_or<std::vector<double>>("diurnal", {});
    if (curve.empty()) {
      c.diurnal = default_diurnal();
    } else if (curve.size() != 24) {
      throw Error(errc::parse_error, "diurnal curve of " + c.code + " needs 24 values");
    } else {
      std::copy(curve.begin(), curve.end(), c.diurnal.begin());
    }
    cr.finish();
    p.countries.push_back(std::move(c));
  }
  p.return_probability = r.value_or<double>("returnProbability", p.return_probability);
  p.cross_condition_probability =
      r.value_or<double>("crossConditionProbability", p.cross_condition_probability);
  if (const Json* dt = r.optional_json("decisionTime")) {
    ObjectReader dr(*dt, "profile.decisionTime");
    p.decision_time.median_s = dr.value_or<double>("medianSeconds", p.decision_time.median_s);
    p.decision_time.sigma = dr.value_or<double>("sigma", p.decision_time.sigma);
    dr.finish();
  }
  p.group_multipliers =
      r.value_or<std::map<std::string, double>>("groupMultipliers", p.group_multipliers);
  p.returning_same_speedup = r.value_or<double>("returningSameSpeedup", p.returning_same_speedup);
  if (const Json* cm = r.optional_json("crossoverMultipliers")) {
    p.crossover_multipliers.clear();
    for (const auto& e : *cm) {
      ObjectReader er(e, "profile.crossoverMultipliers[]");
      const auto from = workflow::condition_kind_from_string(er.required<std::string>("from"));
      const auto to = workflow::condition_kind_from_string(er.required<std::string>("to"));
      p.crossover_multipliers[{from, to}] = er.required<double>("multiplier");
      er.finish();
    }
  }
  p.base_accuracy = r.value_or<double>("baseAccuracy", p.base_accuracy);
  p.fingerprint_collision_rate =
      r.value_or<double>("fingerprintCollisionRate", p.fingerprint_collision_rate);
  p.seed = r.value_or<std::uint64_t>("seed", p.seed);
  p.pages_min = r.value_or<int>("pagesMin", p.pages_min);
  p.pages_max = r.value_or<int>("pagesMax", p.pages_max);
  p.return_delay_mean_hours = r.value_or<double>("returnDelayMeanHours", p.return_delay_mean_hours);
  p.page_gap_s = r.value_or<double>("pageGapSeconds", p.page_gap_s);
  r.finish();
  return p;
}

Violations validate_profile(const PopulationProfile& p) {
  Violations out;
  auto prob = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) out.push_back({"profile", std::string(name) + " must be in [0,1]", ""});
  };
  auto positive = [&](double v, const std::string& name) {
    if (!(v > 0.0)) out.push_back({"profile", name + " must be > 0", ""});
  };
  if (p.countries.empty()) out.push_back({"profile", "country mix is empty", ""});
  for (const auto& c : p.countries) {
    positive(c.weight, "weight of " + c.code);
    for (double d : c.diurnal) {
      if (d < 0) out.push_back({"profile", "diurnal multipliers of " + c.code + " must be >= 0", c.code});
    }
  }
  prob(p.return_probability, "returnProbability");
  prob(p.cross_condition_probability, "crossConditionProbability");
  prob(p.base_accuracy, "baseAccuracy");
  prob(p.fingerprint_collision_rate, "fingerprintCollisionRate");
  positive(p.decision_time.median_s, "decisionTime.medianSeconds");
  if (p.decision_time.sigma < 0) out.push_back({"profile", "decisionTime.sigma must be >= 0", ""});
  positive(p.returning_same_speedup, "returningSameSpeedup");
  for (const auto& [g, m] : p.group_multipliers) positive(m, "multiplier of group " + g);
  for (const auto& [_, m] : p.crossover_multipliers) positive(m, "crossover multiplier");
  if (p.pages_min < 1 || p.pages_max < p.pages_min) {
    out.push_back({"profile", "pages range must satisfy 1 <= pagesMin <= pagesMax", ""});
  }
  positive(p.return_delay_mean_hours, "returnDelayMeanHours");
  return out;
}

std::string_view to_string(SimEventKind k) {
  switch (k) {
    case SimEventKind::worker_arrival: return "worker-arrival";
    case SimEventKind::page_load: return "page-load";
    case SimEventKind::judgment_submitted: return "judgment-submitted";
    case SimEventKind::worker_returns: return "worker-returns";
  }
  return "?";
}

double expected_arrivals(const PopulationProfile& p, Timestamp hour_start) {
  const int utc_hour = static_cast<int>(seconds_of_day(hour_start) / 3600);
  double total = 0;
  for (const auto& c : p.countries) {
    total += c.weight * c.diurnal[static_cast<std::size_t>(local_hour(utc_hour, c.utc_offset_hours))];
  }
  return total;
}

std::vector<SimEvent> simulate_arrivals(const PopulationProfile& p, Timestamp t0, Timestamp t1) {
  using std::chrono::hours;
  std::vector<SimEvent> out;
  if (!(t0 < t1)) return out;
  const std::int64_t first_hour = to_epoch_ms(t0) / 3'600'000 - (to_epoch_ms(t0) % 3'600'000 < 0);
  for (std::int64_t h = first_hour; from_epoch_ms(h * 3'600'000) < t1; ++h) {
    const Timestamp start = from_epoch_ms(h * 3'600'000);
    const int utc_hour = static_cast<int>(((h % 24) + 24) % 24);
    std::vector<SimEvent> hour;
    for (std::size_t ci = 0; ci < p.countries.size(); ++ci) {
      const auto& c = p.countries[ci];
      const double rate =
          c.weight * c.diurnal[static_cast<std::size_t>(local_hour(utc_hour, c.utc_offset_hours))];
      if (rate <= 0) continue;
      std::mt19937_64 rng(seed_mix(seed_mix(p.seed, static_cast<std::uint64_t>(h)), ci));
      const int n = std::poisson_distribution<int>(rate)(rng);
      std::uniform_int_distribution<std::int64_t> offset(0, 3'600'000 - 1);
      for (int k = 0; k < n; ++k) {
        SimEvent e;
        e.time = start + Millis{offset(rng)};
        e.kind = SimEventKind::worker_arrival;
        e.country = c.code;
        e.seq = ci;
        hour.push_back(std::move(e));
      }
    }
    std::stable_sort(hour.begin(), hour.end(), [](const SimEvent& a, const SimEvent& b) {
      return a.time != b.time ? a.time < b.time : a.seq < b.seq;
    });
    for (auto& e : hour) {
      if (e.time >= t0 && e.time < t1) out.push_back(std::move(e));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].seq = i;
  return out;
}

Behavior simulate_worker_behavior(const PopulationProfile& p, std::mt19937_64& rng,
                                  const BehaviorContext& ctx) {
  if (ctx.is_returning != ctx.from_group.has_value()) {
    throw Error(errc::invalid_argument, "from_group must be present iff the worker is returning");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z = normal(rng);
  double t = p.decision_time.median_s * std::exp(p.decision_time.sigma * z);
  if (auto it = p.group_multipliers.find(ctx.to_group); it != p.group_multipliers.end()) {
    t *= it->second;
  }
  if (ctx.is_returning) {
    if (*ctx.from_group == ctx.to_group) {
      t *= p.returning_same_speedup;
    } else if (auto it = p.crossover_multipliers.find({ctx.from_kind, ctx.to_kind});
               it != p.crossover_multipliers.end()) {
      t *= it->second;
    }
  }
  Behavior b;
  b.decision_time_s = std::round(t * 1000.0) / 1000.0;
  b.correct = std::bernoulli_distribution(p.base_accuracy)(rng);
  return b;
}

}  // namespace crowdctl::platform
