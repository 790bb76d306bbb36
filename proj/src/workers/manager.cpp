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

#include "crowdctl/workers/manager.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"

namespace crowdctl::workers {
namespace {

constexpr std::array<std::string_view, 8> kReasons = {
    "new-assignment",  "returning-same-allowed", "returning-crossover-allowed",
    "repeat-blocked",  "crossover-blocked",      "quota-exhausted",
    "untrusted",       "task-closed"};

constexpr std::string_view kIdentity = "identity";
constexpr std::string_view kWorker = "worker";
constexpr std::string_view kSession = "session";
constexpr std::string_view kCounter = "counter";
constexpr std::string_view kQuotaOverride = "quota-config";

std::string key(std::initializer_list<std::string_view> parts) {
  std::string k;
  for (auto p : parts) {
    if (!k.empty()) k += '|';
    k += p;
  }
  return k;
}

std::string canonical_of(const std::string& root) { return "w-" + sha256_hex(root).substr(0, 16); }

Reason reason_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kReasons.size(); ++i) {
    if (kReasons[i] == s) return static_cast<Reason>(i);
  }
  throw Error(errc::parse_error, "unknown reason '" + std::string(s) + "'");
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string_view to_string(Action a) { return a == Action::proceed ? "proceed" : "block"; }
std::string_view to_string(Reason r) { return kReasons[static_cast<std::size_t>(r)]; }

bool is_trusted(std::int64_t gold_correct, std::int64_t gold_total, const EligibilityPolicy& p) {
  if (gold_total < p.trust_warmup) return true;
  return static_cast<double>(gold_correct) >= p.trust_threshold * static_cast<double>(gold_total);
}

Json to_json(const WorkerRecord& w) {
  Json parts = Json::array();
  for (const auto& p : w.participations) {
    parts.push_back(Json{{"runId", p.run_id},
                         {"groupId", p.group_id},
                         {"blockId", p.block_id},
                         {"at", format_utc(p.at)}});
  }
  return Json{{"canonicalId", w.canonical_id},
              {"country", w.country},
              {"firstSeen", format_utc(w.first_seen)},
              {"lastSeen", format_utc(w.last_seen)},
              {"participations", parts},
              {"goldCorrect", w.gold_correct},
              {"goldTotal", w.gold_total},
              {"trusted", w.trusted}};
}

WorkerRecord worker_record_from_json(const Json& j) {
  WorkerRecord w;
  w.canonical_id = j.at("canonicalId").get<std::string>();
  w.country = j.at("country").get<std::string>();
  w.first_seen = parse_utc(j.at("firstSeen").get<std::string>());
  w.last_seen = parse_utc(j.at("lastSeen").get<std::string>());
  for (const auto& p : j.at("participations")) {
    w.participations.push_back({p.at("runId").get<std::string>(), p.at("groupId").get<std::string>(),
                                p.at("blockId").get<std::string>(),
                                parse_utc(p.at("at").get<std::string>())});
  }
  w.gold_correct = j.at("goldCorrect").get<std::int64_t>();
  w.gold_total = j.at("goldTotal").get<std::int64_t>();
  w.trusted = j.at("trusted").get<bool>();
  return w;
}

Json to_json(const AssignmentDecision& d) {
  Json j{{"action", to_string(d.action)},
         {"reason", to_string(d.reason)},
         {"message", d.message},
         {"workerId", d.canonical_id},
         {"compliant", d.compliant}};
  j["group"] = d.group_id ? Json(*d.group_id) : Json(nullptr);
  j["block"] = d.block_id ? Json(*d.block_id) : Json(nullptr);
  return j;
}

AssignmentDecision decision_from_json(const Json& j) {
  AssignmentDecision d;
  d.action = j.at("action").get<std::string>() == "proceed" ? Action::proceed : Action::block;
  d.reason = reason_from_string(j.at("reason").get<std::string>());
  d.message = j.at("message").get<std::string>();
  d.canonical_id = j.at("workerId").get<std::string>();
  d.compliant = j.at("compliant").get<bool>();
  if (!j.at("group").is_null()) d.group_id = j["group"].get<std::string>();
  if (!j.at("block").is_null()) d.block_id = j["block"].get<std::string>();
  return d;
}

WorkerManager::WorkerManager(store::Store& store, const Clock& clock)
    : store_(store), clock_(clock) {}

void WorkerManager::register_run(RunContext c) {
  if (!c.block_open) c.block_open = [](const std::string&) { return true; };
  // A live quota edit outlives the process that applied it.
  if (auto edited = store_.get(kQuotaOverride, c.run_id)) {
    c.quotas = quotas_from_json(Json::parse(edited->value));
  }
  std::lock_guard lock(ctx_mu_);
  runs_[c.run_id] = std::move(c);
}

bool WorkerManager::has_run(const std::string& run_id) const {
  std::lock_guard lock(ctx_mu_);
  return runs_.contains(run_id);
}

const RunContext& WorkerManager::context(const std::string& run_id) const {
  std::lock_guard lock(ctx_mu_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw Error(errc::not_found, "unknown run " + run_id);
  return it->second;
}

RunContext& WorkerManager::ctx(const std::string& run_id) {
  return const_cast<RunContext&>(std::as_const(*this).context(run_id));
}

void WorkerManager::audit(const std::string& run_id, std::string_view kind, const Json& detail) {
  store_.append_audit(run_id, kind, detail, clock_.now());
}

std::string WorkerManager::find_root(const std::string& node) {
  std::string cur = node;
  for (;;) {
    auto parent = store_.get(kIdentity, cur);
    if (!parent || parent->value == cur) return cur;
    cur = parent->value;
  }
}

std::optional<WorkerRecord> WorkerManager::worker(const std::string& canonical_id) {
  auto v = store_.get(kWorker, canonical_id);
  if (!v) return std::nullopt;
  return worker_record_from_json(Json::parse(v->value));
}

WorkerRecord WorkerManager::load_or_new(const std::string& cid, const std::string& country) {
  if (auto w = worker(cid)) return *w;
  WorkerRecord w;
  w.canonical_id = cid;
  w.country = country;
  w.first_seen = w.last_seen = clock_.now();
  return w;
}

void WorkerManager::save_worker(const WorkerRecord& w) {
  store_.put(kWorker, w.canonical_id, to_json(w).dump());
}

std::string WorkerManager::resolve_identity(const std::string& platform_id,
                                            const std::string& fingerprint,
                                            const std::string& audit_run) {
  if (platform_id.empty() || fingerprint.empty()) {
    throw Error(errc::invalid_argument, "platform id and fingerprint must be non-empty");
  }
  return store_.transact([&] {
    const std::string pn = "p:" + platform_id;
    const std::string fn = "f:" + fingerprint;
    const bool has_p = store_.get(kIdentity, pn).has_value();
    const bool has_f = store_.get(kIdentity, fn).has_value();
    if (!has_p && !has_f) {
      store_.put(kIdentity, fn, fn);
      store_.put(kIdentity, pn, fn);
      return canonical_of(fn);
    }
    if (has_f && !has_p) {
      const std::string root = find_root(fn);
      store_.put(kIdentity, pn, root);
      audit(audit_run, "identity-merge",
            Json{{"node", pn}, {"into", canonical_of(root)}, {"via", "fingerprint"}});
      return canonical_of(root);
    }
    if (has_p && !has_f) {
      const std::string root = find_root(pn);
      store_.put(kIdentity, fn, root);
      audit(audit_run, "identity-merge",
            Json{{"node", fn}, {"into", canonical_of(root)}, {"via", "platform-id"}});
      return canonical_of(root);
    }
    const std::string pr = find_root(pn);
    const std::string fr = find_root(fn);
    if (pr == fr) return canonical_of(fr);

    // Two known identities meet: the fingerprint's side survives.
    store_.put(kIdentity, pr, fr);
    const std::string winner = canonical_of(fr);
    const std::string loser = canonical_of(pr);
    if (auto lw = worker(loser)) {
      WorkerRecord w = worker(winner).value_or(*lw);
      if (w.canonical_id != winner) {
        w.canonical_id = winner;
      } else {
        w.participations.insert(w.participations.end(), lw->participations.begin(),
                                lw->participations.end());
        w.gold_correct += lw->gold_correct;
        w.gold_total += lw->gold_total;
        w.first_seen = std::min(w.first_seen, lw->first_seen);
        w.last_seen = std::max(w.last_seen, lw->last_seen);
      }
      w.trusted = is_trusted(w.gold_correct, w.gold_total, EligibilityPolicy{});
      save_worker(w);
    }
    for (const auto& [k, v] : store_.scan("assignment", loser + "|")) {
      const std::string run = k.substr(loser.size() + 1);
      if (!store_.assignment_of(winner + "|" + run)) {
        store_.check_and_assign(winner + "|" + run, v.value, std::nullopt);
      }
    }
    audit(audit_run, "identity-merge",
          Json{{"from", loser}, {"into", winner}, {"via", "union"}});
    return winner;
  });
}

std::optional<WorkerManager::Assignment> WorkerManager::load_assignment(const std::string& run_id,
                                                                        const std::string& cid) {
  auto v = store_.assignment_of(cid + "|" + run_id);
  if (!v) return std::nullopt;
  const Json j = Json::parse(*v);
  return Assignment{j.at("group").get<std::string>(), j.at("block").get<std::string>()};
}

std::int64_t WorkerManager::draws(const std::string& run_id) {
  auto v = store_.get(kCounter, key({"draws", run_id}));
  return v ? std::stoll(v->value) : 0;
}

std::map<std::string, std::int64_t> WorkerManager::group_assignment_counts(
    const std::string& run_id) {
  std::map<std::string, std::int64_t> out;
  const std::string prefix = key({"group", run_id}) + "|";
  for (const auto& [k, v] : store_.scan(kCounter, prefix)) {
    out[k.substr(prefix.size())] = std::stoll(v.value);
  }
  return out;
}

std::int64_t WorkerManager::rotation_index(const std::string& run_id) {
  auto v = store_.get(kCounter, key({"rotation", run_id}));
  return v ? std::stoll(v->value) : 0;
}

namespace {

void bump(store::Store& s, const std::string& k) {
  auto v = s.get(kCounter, k);
  const std::int64_t n = v ? std::stoll(v->value) : 0;
  if (s.compare_and_set(kCounter, k, v ? v->version : 0, std::to_string(n + 1)) != store::Cas::ok) {
    throw StorageError("counter " + k + " changed under an open transaction");
  }
}

std::int64_t counter(store::Store& s, const std::string& k) {
  auto v = s.get(kCounter, k);
  return v ? std::stoll(v->value) : 0;
}

}  // namespace

std::optional<std::string> WorkerManager::draw_group(RunContext& c, const std::string& bucket) {
  const auto& groups = c.groups;
  if (groups.empty()) return std::nullopt;
  auto group_open = [&](const std::string& g) {
    auto it = c.blocks_by_group.find(g);
    if (it == c.blocks_by_group.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const std::string& b) { return c.block_open(b); });
  };

  std::vector<std::string> allowed = groups;
  if (c.quotas && c.enforce_quotas && c.quotas->enforcement == QuotaEnforcement::soft_rotate) {
    allowed = rotation_for(*c.quotas, groups, rotation_index(c.run_id)).groups_for(bucket, groups);
  }
  if (allowed.size() < groups.size()) {
    // Restricted offer: least-assigned open group of the offered set.
    auto counts = group_assignment_counts(c.run_id);
    std::optional<std::string> best;
    for (const auto& g : allowed) {
      if (!group_open(g)) continue;
      if (!best || counts[g] < counts[*best]) best = g;
    }
    return best;
  }

  // Balanced block randomization: draw n takes slot n % G of permutation
  // n / G, each permutation shuffled from (seed, n / G).
  const std::string draws_key = key({"draws", c.run_id});
  std::int64_t n = counter(store_, draws_key);
  const auto g_count = static_cast<std::int64_t>(groups.size());
  for (std::int64_t tries = 0; tries < 2 * g_count; ++tries, ++n) {
    std::vector<std::string> perm = groups;
    std::mt19937_64 rng(mix(c.seed, static_cast<std::uint64_t>(n / g_count)));
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    const std::string& g = perm[static_cast<std::size_t>(n % g_count)];
    if (!group_open(g)) continue;
    store_.put(kCounter, draws_key, std::to_string(n + 1));
    return g;
  }
  return std::nullopt;
}

std::string WorkerManager::assign_condition(const std::string& run_id,
                                            const std::string& canonical_id) {
  RunContext& c = ctx(run_id);
  return store_.transact([&] {
    if (auto a = load_assignment(run_id, canonical_id)) return a->group_id;
    auto g = draw_group(c, std::string(kRestBucket));
    if (!g) throw Error(errc::invalid_state, "no open group in run " + run_id);
    const auto& blocks = c.blocks_by_group[*g];
    const std::string blk = route_block(c, *g, blocks.empty() ? "" : blocks.front());
    Json a{{"group", *g}, {"block", blk}};
    if (store_.check_and_assign(canonical_id + "|" + run_id, a.dump(), std::nullopt) !=
        store::Cas::ok) {
      throw StorageError("assignment changed under an open transaction");
    }
    bump(store_, key({"group", run_id, *g}));
    bump(store_, key({"block", run_id, blk}));
    return *g;
  });
}

std::string WorkerManager::route_block(const RunContext& c, const std::string& group,
                                       const std::string& requested) {
  auto it = c.blocks_by_group.find(group);
  if (it == c.blocks_by_group.end() || it->second.empty()) return requested;
  const auto& blocks = it->second;
  if (std::find(blocks.begin(), blocks.end(), requested) != blocks.end() &&
      c.block_open(requested)) {
    return requested;
  }
  std::optional<std::string> best;
  std::int64_t best_n = 0;
  for (const auto& b : blocks) {
    if (!c.block_open(b)) continue;
    const std::int64_t n = counter(store_, key({"block", c.run_id, b}));
    if (!best || n < best_n || (n == best_n && b < *best)) {
      best = b;
      best_n = n;
    }
  }
  return best.value_or(blocks.front());
}

AssignmentDecision WorkerManager::decide_eligibility(const std::string& run_id,
                                                     const std::string& platform_id,
                                                     const std::string& fingerprint,
                                                     const std::string& country,
                                                     const std::string& block_id) {
  RunContext& c = ctx(run_id);
  std::string block_group;
  for (const auto& [g, blocks] : c.blocks_by_group) {
    if (std::find(blocks.begin(), blocks.end(), block_id) != blocks.end()) block_group = g;
  }
  if (block_group.empty()) {
    throw Error(errc::invalid_argument, "block " + block_id + " is not a Do block of run " + run_id);
  }

  return store_.transact([&] {
    const std::string cid = resolve_identity(platform_id, fingerprint, run_id);
    const std::string session_key = key({run_id, cid, block_id, platform_id});
    if (auto s = store_.get(kSession, session_key)) return decision_from_json(Json::parse(s->value));

    WorkerRecord w = load_or_new(cid, country);
    w.last_seen = clock_.now();
    save_worker(w);

    const bool enforce = c.enforce_eligibility;
    const bool quotas_on = c.quotas && c.enforce_quotas;
    const std::string bucket = c.quotas ? bucket_of(*c.quotas, country) : std::string(kRestBucket);

    AssignmentDecision d;
    d.canonical_id = cid;
    auto block_with = [&](Reason r) {
      d.action = Action::block;
      d.reason = r;
      d.group_id.reset();
      d.block_id.reset();
    };
    auto proceed_with = [&](Reason r, const std::string& g, const std::string& b) {
      d.action = Action::proceed;
      d.reason = r;
      d.group_id = g;
      d.block_id = b;
    };

    const auto asg = load_assignment(run_id, cid);
    if (!asg) {
      if (enforce && !w.trusted) {
        block_with(Reason::untrusted);
      } else if (quotas_on && !check_quota(*c.quotas, bucket_counts(run_id), country).allowed) {
        block_with(Reason::quota_exhausted);
      } else {
        std::optional<std::string> g;
        std::string blk;
        if (enforce) {
          g = draw_group(c, bucket);
          if (g) blk = route_block(c, *g, block_id);
        } else if (c.block_open(block_id)) {
          g = block_group;
          blk = block_id;
        }
        if (!g) {
          const bool resting = quotas_on &&
                               c.quotas->enforcement == QuotaEnforcement::soft_rotate &&
                               bucket != kRestBucket;
          block_with(resting ? Reason::quota_exhausted : Reason::task_closed);
        } else {
          Json a{{"group", *g}, {"block", blk}};
          if (store_.check_and_assign(cid + "|" + run_id, a.dump(), std::nullopt) !=
              store::Cas::ok) {
            throw StorageError("assignment changed under an open transaction");
          }
          bump(store_, key({"group", run_id, *g}));
          bump(store_, key({"block", run_id, blk}));
          proceed_with(Reason::new_assignment, *g, blk);
        }
      }
      d.compliant = d.action == Action::proceed || !enforce;
    } else {
      // Returning to this run in a new session. Work out what the policy
      // says, then either enforce it or just record it.
      const bool same = block_group == asg->group_id;
      const auto& p = c.policy;
      Reason verdict;
      bool allowed;
      if (p.recurrence == Recurrence::block_all_repeats) {
        verdict = Reason::repeat_blocked;
        allowed = false;
      } else if (same) {
        verdict = Reason::returning_same_allowed;
        allowed = true;
      } else if (p.recurrence == Recurrence::allow_same_condition ||
                 p.crossover == CrossoverRule::block) {
        verdict = Reason::crossover_blocked;
        allowed = false;
      } else {
        verdict = Reason::returning_crossover_allowed;
        allowed = true;
      }
      d.compliant = allowed;
      const Reason observed =
          same ? Reason::returning_same_allowed : Reason::returning_crossover_allowed;
      if (!c.block_open(block_id)) {
        block_with(Reason::task_closed);
      } else if (enforce && !w.trusted) {
        block_with(Reason::untrusted);
      } else if (enforce && !allowed) {
        block_with(verdict);
      } else if (quotas_on && !check_quota(*c.quotas, bucket_counts(run_id), country).allowed) {
        block_with(Reason::quota_exhausted);
      } else {
        proceed_with(enforce ? verdict : observed, block_group, block_id);
      }
    }
    if (d.action == Action::block) d.message = c.policy.message_on_block;

    store_.put(kSession, session_key, to_json(d).dump());
    // Judgments arrive for the routed block, so the session is filed there too.
    if (d.block_id && *d.block_id != block_id) {
      store_.put(kSession, key({run_id, cid, *d.block_id, platform_id}), to_json(d).dump());
    }
    Json detail = to_json(d);
    detail["platformWorkerId"] = platform_id;
    detail["landedOn"] = block_id;
    detail["country"] = country;
    detail.erase("message");
    audit(run_id, "eligibility", detail);
    return d;
  });
}

platform::Judgment WorkerManager::record_judgment(const std::string& run_id,
                                                  const std::string& canonical_id,
                                                  platform::Judgment j) {
  RunContext& c = ctx(run_id);
  auto recorded = store_.transact([&]() -> std::optional<platform::Judgment> {
    std::optional<AssignmentDecision> session;
    for (const auto& [k, v] : store_.scan(kSession, key({run_id, canonical_id, j.block_id}) + "|")) {
      auto d = decision_from_json(Json::parse(v.value));
      if (d.action == Action::proceed) {
        session = d;
        break;
      }
    }
    if (!load_assignment(run_id, canonical_id) || !session) return std::nullopt;
    WorkerRecord w = load_or_new(canonical_id, j.country);
    if (j.is_gold) {
      ++w.gold_total;
      if (j.gold_correct.value_or(false)) ++w.gold_correct;
    }
    w.trusted = is_trusted(w.gold_correct, w.gold_total, c.policy);
    const bool seen = std::any_of(w.participations.begin(), w.participations.end(),
                                  [&](const Participation& p) {
                                    return p.run_id == run_id && p.block_id == j.block_id;
                                  });
    if (!seen) w.participations.push_back({run_id, *session->group_id, j.block_id, j.submitted_at});
    w.last_seen = std::max(w.last_seen, j.submitted_at);
    save_worker(w);

    if (j.country.empty()) j.country = w.country;
    const std::string bucket =
        c.quotas ? bucket_of(*c.quotas, j.country) : std::string(kRestBucket);
    bump(store_, key({"quota", run_id, bucket}));

    j.canonical_worker_id = canonical_id;
    j.group_id = *session->group_id;
    j.trusted = w.trusted;
    j.compliant = session->compliant;
    j.valid = j.trusted && j.compliant;
    return j;
  });
  if (recorded) return *recorded;
  // Audited in its own transaction so the record survives the rejection.
  audit(run_id, "protocol-violation",
        Json{{"workerId", canonical_id}, {"blockId", j.block_id}, {"unitId", j.unit_id}});
  throw Error(errc::protocol_violation,
              "judgment from worker " + canonical_id + " without a proceed decision for block " +
                  j.block_id);
}

std::optional<platform::Judgment> WorkerManager::admit_judgment(const std::string& run_id,
                                                               const std::string& canonical_id,
                                                               platform::Judgment j) {
  std::optional<Error> violation;
  auto admitted = store_.transact([&]() -> std::optional<platform::Judgment> {
    const std::string country =
        j.country.empty() ? load_or_new(canonical_id, "").country : j.country;
    if (!quota_for(run_id, country).allowed) return std::nullopt;
    try {
      return record_judgment(run_id, canonical_id, std::move(j));
    } catch (const Error& e) {
      if (e.code() != errc::protocol_violation) throw;
      violation = e;  // commit the audit record, then rethrow
      return std::nullopt;
    }
  });
  if (violation) throw *violation;
  return admitted;
}

std::map<std::string, std::int64_t> WorkerManager::bucket_counts(const std::string& run_id) {
  std::map<std::string, std::int64_t> out;
  const std::string prefix = key({"quota", run_id}) + "|";
  for (const auto& [k, v] : store_.scan(kCounter, prefix)) {
    out[k.substr(prefix.size())] = std::stoll(v.value);
  }
  return out;
}

QuotaCheck WorkerManager::quota_for(const std::string& run_id, const std::string& country) {
  RunContext& c = ctx(run_id);
  return store_.transact([&] {
    if (!c.quotas || !c.enforce_quotas) {
      QuotaCheck q;
      q.bucket = c.quotas ? bucket_of(*c.quotas, country) : std::string(kRestBucket);
      return q;
    }
    return check_quota(*c.quotas, bucket_counts(run_id), country);
  });
}

BucketRotation WorkerManager::rotate_buckets(const std::string& run_id) {
  RunContext& c = ctx(run_id);
  return store_.transact([&] {
    const std::int64_t k = rotation_index(run_id) + 1;
    store_.put(kCounter, key({"rotation", run_id}), std::to_string(k));
    BucketRotation r = c.quotas ? rotation_for(*c.quotas, c.groups, k) : BucketRotation{k, {}, {}};
    audit(run_id, "bucket-rotation", to_json(r));
    return r;
  });
}

void WorkerManager::apply_quotas(const std::string& run_id, const QuotaConfig& q) {
  RunContext& c = ctx(run_id);
  store_.transact([&] {
    Json before = c.quotas ? to_json(*c.quotas) : Json(nullptr);
    c.quotas = q;
    store_.put(kQuotaOverride, run_id, to_json(q).dump());
    audit(run_id, "quota-edit", Json{{"before", before}, {"after", to_json(q)}});
  });
}

}  // namespace crowdctl::workers
