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

#include "crowdctl/store/store.hpp"

#include <sqlite3.h>

#include <array>

#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"

namespace crowdctl::store {
namespace {

constexpr std::array<std::string_view, 6> kRunStatus = {"created",   "running", "paused",
                                                        "completed", "failed",  "cancelled"};
constexpr std::array<std::string_view, 6> kBlockStatus = {
    "pending", "publishing", "collecting", "transforming", "done", "failed"};

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS workflows(
  id TEXT NOT NULL, version INTEGER NOT NULL, body TEXT NOT NULL, created_at INTEGER NOT NULL,
  PRIMARY KEY(id, version));
CREATE TABLE IF NOT EXISTS runs(
  id TEXT PRIMARY KEY, workflow_id TEXT NOT NULL, workflow_version INTEGER NOT NULL,
  status TEXT NOT NULL, started_at INTEGER, finished_at INTEGER, config TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS run_units(run_id TEXT PRIMARY KEY, body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS block_state(
  run_id TEXT NOT NULL, block_id TEXT NOT NULL, status TEXT NOT NULL, attempts INTEGER NOT NULL,
  handle TEXT, intent_token TEXT, cursor TEXT NOT NULL, retry_at INTEGER, last_error TEXT NOT NULL,
  PRIMARY KEY(run_id, block_id));
CREATE TABLE IF NOT EXISTS block_cache(
  run_id TEXT NOT NULL, block_id TEXT NOT NULL, output TEXT NOT NULL,
  produced_at INTEGER NOT NULL, digest TEXT NOT NULL, PRIMARY KEY(run_id, block_id));
CREATE TABLE IF NOT EXISTS kv(
  ns TEXT NOT NULL, key TEXT NOT NULL, value TEXT NOT NULL, version INTEGER NOT NULL,
  PRIMARY KEY(ns, key));
CREATE TABLE IF NOT EXISTS judgments(
  seq INTEGER PRIMARY KEY AUTOINCREMENT, run_id TEXT NOT NULL, block_id TEXT NOT NULL,
  body TEXT NOT NULL);
CREATE INDEX IF NOT EXISTS judgments_by_run ON judgments(run_id, seq);
CREATE INDEX IF NOT EXISTS judgments_by_block ON judgments(run_id, block_id, seq);
CREATE TABLE IF NOT EXISTS audit(
  seq INTEGER PRIMARY KEY AUTOINCREMENT, run_id TEXT NOT NULL, at INTEGER NOT NULL,
  kind TEXT NOT NULL, detail TEXT NOT NULL);
CREATE INDEX IF NOT EXISTS audit_by_run ON audit(run_id, seq);
CREATE TABLE IF NOT EXISTS share_tokens(
  token TEXT PRIMARY KEY, workflow_id TEXT NOT NULL, run_id TEXT NOT NULL,
  created_at INTEGER NOT NULL, revoked INTEGER NOT NULL);
CREATE TRIGGER IF NOT EXISTS workflows_immutable BEFORE UPDATE ON workflows
  BEGIN SELECT RAISE(ABORT, 'workflow versions are immutable'); END;
CREATE TRIGGER IF NOT EXISTS cache_no_update BEFORE UPDATE ON block_cache
  BEGIN SELECT RAISE(ABORT, 'block cache is write-once'); END;
CREATE TRIGGER IF NOT EXISTS cache_no_delete BEFORE DELETE ON block_cache
  BEGIN SELECT RAISE(ABORT, 'block cache is write-once'); END;
CREATE TRIGGER IF NOT EXISTS judgments_no_update BEFORE UPDATE ON judgments
  BEGIN SELECT RAISE(ABORT, 'judgments are append-only'); END;
CREATE TRIGGER IF NOT EXISTS judgments_no_delete BEFORE DELETE ON judgments
  BEGIN SELECT RAISE(ABORT, 'judgments are append-only'); END;
CREATE TRIGGER IF NOT EXISTS audit_no_update BEFORE UPDATE ON audit
  BEGIN SELECT RAISE(ABORT, 'audit is append-only'); END;
CREATE TRIGGER IF NOT EXISTS audit_no_delete BEFORE DELETE ON audit
  BEGIN SELECT RAISE(ABORT, 'audit is append-only'); END;
)sql";

std::optional<std::int64_t> opt_ms(const std::optional<Timestamp>& t) {
  if (!t) return std::nullopt;
  return to_epoch_ms(*t);
}

}  // namespace

std::string_view to_string(RunStatus s) { return kRunStatus[static_cast<std::size_t>(s)]; }
std::string_view to_string(BlockStatus s) { return kBlockStatus[static_cast<std::size_t>(s)]; }

RunStatus run_status_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kRunStatus.size(); ++i) {
    if (kRunStatus[i] == s) return static_cast<RunStatus>(i);
  }
  throw Error(errc::parse_error, "unknown run status '" + std::string(s) + "'");
}

BlockStatus block_status_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kBlockStatus.size(); ++i) {
    if (kBlockStatus[i] == s) return static_cast<BlockStatus>(i);
  }
  throw Error(errc::parse_error, "unknown block status '" + std::string(s) + "'");
}

std::string digest_of(const Json& value) { return sha256_hex(value.dump()); }

// Thin RAII wrapper over a cached prepared statement.
class Store::Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v3(db, sql, -1, SQLITE_PREPARE_PERSISTENT, &st_, nullptr) != SQLITE_OK) {
      throw StorageError(std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(st_); }

  Stmt& reset() {
    sqlite3_reset(st_);
    sqlite3_clear_bindings(st_);
    col_ = 0;
    return *this;
  }
  Stmt& bind(std::string_view v) {
    sqlite3_bind_text(st_, ++col_, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(const std::string& v) { return bind(std::string_view(v)); }
  Stmt& bind(const char* v) { return bind(std::string_view(v)); }
  Stmt& bind(std::int64_t v) {
    sqlite3_bind_int64(st_, ++col_, v);
    return *this;
  }
  Stmt& bind(int v) { return bind(static_cast<std::int64_t>(v)); }
  Stmt& bind(const std::optional<std::int64_t>& v) {
    if (v) return bind(*v);
    sqlite3_bind_null(st_, ++col_);
    return *this;
  }
  Stmt& bind(const std::optional<std::string>& v) {
    if (v) return bind(*v);
    sqlite3_bind_null(st_, ++col_);
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(st_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    const std::string msg = sqlite3_errmsg(db_);
    sqlite3_reset(st_);
    throw StorageError(msg);
  }
  void run() {
    while (step()) {
    }
  }

  bool is_null(int i) const { return sqlite3_column_type(st_, i) == SQLITE_NULL; }
  std::int64_t i64(int i) const { return sqlite3_column_int64(st_, i); }
  std::string text(int i) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(st_, i));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(st_, i))) : "";
  }
  std::optional<std::string> opt_text(int i) const {
    if (is_null(i)) return std::nullopt;
    return text(i);
  }
  std::optional<Timestamp> opt_time(int i) const {
    if (is_null(i)) return std::nullopt;
    return from_epoch_ms(i64(i));
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* st_ = nullptr;
  int col_ = 0;
};

Store::Tx::Tx(Store& s) : s_(s), outer_(s.depth_ == 0) {
  if (outer_) s_.exec("BEGIN IMMEDIATE");
  ++s_.depth_;
}

Store::Tx::~Tx() {
  --s_.depth_;
  if (outer_ && !done_) {
    sqlite3_exec(s_.db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
}

void Store::Tx::commit() {
  if (outer_) s_.exec("COMMIT");
  done_ = true;
}

Store::Store(const std::string& path) : path_(path) {
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX;
  if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw StorageError("cannot open store '" + path + "': " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  if (path != ":memory:") {
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=NORMAL");
  }
  exec("PRAGMA foreign_keys=ON");
  migrate();
}

Store::~Store() {
  stmts_.clear();
  sqlite3_close(db_);
}

void Store::exec(const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw StorageError(msg);
  }
}

void Store::migrate() { exec(kSchema); }

Store::Stmt& Store::stmt(const char* sql) {
  auto it = stmts_.find(sql);
  if (it == stmts_.end()) it = stmts_.emplace(sql, std::make_unique<Stmt>(db_, sql)).first;
  return it->second->reset();
}

void Store::put_workflow(const std::string& id, int version, const Json& body, Timestamp at) {
  transact([&] {
    auto& s = stmt("INSERT OR IGNORE INTO workflows(id, version, body, created_at) VALUES(?,?,?,?)");
    s.bind(id).bind(version).bind(body.dump()).bind(to_epoch_ms(at)).run();
    if (sqlite3_changes(db_) == 0) {
      throw Error(errc::conflict,
                  "workflow " + id + " version " + std::to_string(version) + " already exists");
    }
  });
}

std::optional<Json> Store::get_workflow(const std::string& id, int version) {
  std::lock_guard lock(mu_);
  auto& s = stmt("SELECT body FROM workflows WHERE id = ? AND version = ?");
  s.bind(id).bind(version);
  if (!s.step()) return std::nullopt;
  Json j = Json::parse(s.text(0));
  s.reset();
  return j;
}

std::optional<int> Store::latest_workflow_version(const std::string& id) {
  std::lock_guard lock(mu_);
  auto& s = stmt("SELECT MAX(version) FROM workflows WHERE id = ?");
  s.bind(id);
  if (!s.step() || s.is_null(0)) return std::nullopt;
  const int v = static_cast<int>(s.i64(0));
  s.reset();
  return v;
}

std::vector<std::pair<std::string, int>> Store::list_workflows() {
  std::lock_guard lock(mu_);
  auto& s = stmt("SELECT id, MAX(version) FROM workflows GROUP BY id ORDER BY id");
  std::vector<std::pair<std::string, int>> out;
  while (s.step()) out.emplace_back(s.text(0), static_cast<int>(s.i64(1)));
  return out;
}

void Store::create_run(const RunRecord& run) {
  transact([&] {
    auto& s = stmt(
        "INSERT OR IGNORE INTO runs(id, workflow_id, workflow_version, status, started_at, "
        "finished_at, config) VALUES(?,?,?,?,?,?,?)");
    s.bind(run.id).bind(run.workflow_id).bind(run.workflow_version).bind(to_string(run.status));
    s.bind(opt_ms(run.started_at)).bind(opt_ms(run.finished_at)).bind(run.config.dump()).run();
    if (sqlite3_changes(db_) == 0) throw Error(errc::conflict, "run " + run.id + " exists");
  });
}

std::optional<RunRecord> Store::get_run(const std::string& id) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT workflow_id, workflow_version, status, started_at, finished_at, config FROM runs "
      "WHERE id = ?");
  s.bind(id);
  if (!s.step()) return std::nullopt;
  RunRecord r;
  r.id = id;
  r.workflow_id = s.text(0);
  r.workflow_version = static_cast<int>(s.i64(1));
  r.status = run_status_from_string(s.text(2));
  r.started_at = s.opt_time(3);
  r.finished_at = s.opt_time(4);
  r.config = Json::parse(s.text(5));
  s.reset();
  return r;
}

void Store::update_run(const RunRecord& run) {
  transact([&] {
    auto& s = stmt(
        "UPDATE runs SET status = ?, started_at = ?, finished_at = ?, config = ? WHERE id = ?");
    s.bind(to_string(run.status)).bind(opt_ms(run.started_at)).bind(opt_ms(run.finished_at));
    s.bind(run.config.dump()).bind(run.id).run();
    if (sqlite3_changes(db_) == 0) throw Error(errc::not_found, "unknown run " + run.id);
  });
}

std::vector<std::string> Store::list_runs() {
  std::lock_guard lock(mu_);
  auto& s = stmt("SELECT id FROM runs ORDER BY id");
  std::vector<std::string> out;
  while (s.step()) out.push_back(s.text(0));
  return out;
}

void Store::put_run_units(const std::string& run_id, const Json& units) {
  transact([&] {
    stmt("INSERT OR REPLACE INTO run_units(run_id, body) VALUES(?,?)")
        .bind(run_id)
        .bind(units.dump())
        .run();
  });
}

std::optional<Json> Store::get_run_units(const std::string& run_id) {
  std::lock_guard lock(mu_);
  auto& s = stmt("SELECT body FROM run_units WHERE run_id = ?");
  s.bind(run_id);
  if (!s.step()) return std::nullopt;
  Json j = Json::parse(s.text(0));
  s.reset();
  return j;
}

void Store::put_block(const std::string& run_id, const BlockRecord& b) {
  transact([&] {
    auto& s = stmt(
        "INSERT OR REPLACE INTO block_state(run_id, block_id, status, attempts, handle, "
        "intent_token, cursor, retry_at, last_error) VALUES(?,?,?,?,?,?,?,?,?)");
    s.bind(run_id).bind(b.block_id).bind(to_string(b.status)).bind(b.attempts);
    s.bind(b.handle ? std::optional<std::string>(b.handle->dump()) : std::nullopt);
    s.bind(b.intent_token).bind(b.cursor).bind(opt_ms(b.retry_at)).bind(b.last_error).run();
  });
}

namespace {

template <typename S>
BlockRecord block_from_row(const S& s) {
  BlockRecord b;
  b.block_id = s.text(0);
  b.status = block_status_from_string(s.text(1));
  b.attempts = static_cast<int>(s.i64(2));
  if (auto h = s.opt_text(3)) b.handle = Json::parse(*h);
  b.intent_token = s.opt_text(4);
  b.cursor = s.text(5);
  b.retry_at = s.opt_time(6);
  b.last_error = s.text(7);
  return b;
}

}  // namespace

std::optional<BlockRecord> Store::get_block(const std::string& run_id,
                                            const std::string& block_id) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT block_id, status, attempts, handle, intent_token, cursor, retry_at, last_error "
      "FROM block_state WHERE run_id = ? AND block_id = ?");
  s.bind(run_id).bind(block_id);
  if (!s.step()) return std::nullopt;
  auto b = block_from_row(s);
  s.reset();
  return b;
}

std::vector<BlockRecord> Store::blocks(const std::string& run_id) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT block_id, status, attempts, handle, intent_token, cursor, retry_at, last_error "
      "FROM block_state WHERE run_id = ? ORDER BY block_id");
  s.bind(run_id);
  std::vector<BlockRecord> out;
  while (s.step()) out.push_back(block_from_row(s));
  return out;
}

PutOnceResult Store::put_once(const std::string& run_id, const std::string& block_id,
                              const Json& output, Timestamp at) {
  return transact([&] {
    const std::string digest = digest_of(output);
    auto& s = stmt(
        "INSERT OR IGNORE INTO block_cache(run_id, block_id, output, produced_at, digest) "
        "VALUES(?,?,?,?,?)");
    s.bind(run_id).bind(block_id).bind(output.dump()).bind(to_epoch_ms(at)).bind(digest).run();
    if (sqlite3_changes(db_) == 1) return PutOnceResult{PutOnce::ok, digest};
    auto& q = stmt("SELECT digest FROM block_cache WHERE run_id = ? AND block_id = ?");
    q.bind(run_id).bind(block_id);
    q.step();
    PutOnceResult r{PutOnce::already_exists, q.text(0)};
    q.reset();
    return r;
  });
}

namespace {

template <typename S>
CacheEntry cache_from_row(const S& s) {
  return CacheEntry{s.text(0), s.text(1), Json::parse(s.text(2)), from_epoch_ms(s.i64(3)),
                    s.text(4)};
}

}  // namespace

std::optional<CacheEntry> Store::get_cache(const std::string& run_id,
                                           const std::string& block_id) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT run_id, block_id, output, produced_at, digest FROM block_cache "
      "WHERE run_id = ? AND block_id = ?");
  s.bind(run_id).bind(block_id);
  if (!s.step()) return std::nullopt;
  auto e = cache_from_row(s);
  s.reset();
  return e;
}

std::vector<CacheEntry> Store::cache_entries(const std::string& run_id) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT run_id, block_id, output, produced_at, digest FROM block_cache "
      "WHERE run_id = ? ORDER BY block_id");
  s.bind(run_id);
  std::vector<CacheEntry> out;
  while (s.step()) out.push_back(cache_from_row(s));
  return out;
}

std::optional<Versioned> Store::get(std::string_view ns, std::string_view key) {
  std::lock_guard lock(mu_);
  auto& s = stmt("SELECT value, version FROM kv WHERE ns = ? AND key = ?");
  s.bind(ns).bind(key);
  if (!s.step()) return std::nullopt;
  Versioned v{s.text(0), s.i64(1)};
  s.reset();
  return v;
}

Cas Store::compare_and_set(std::string_view ns, std::string_view key,
                           std::int64_t expected_version, std::string_view value) {
  return transact([&] {
    if (expected_version == 0) {
      stmt("INSERT OR IGNORE INTO kv(ns, key, value, version) VALUES(?,?,?,1)")
          .bind(ns)
          .bind(key)
          .bind(value)
          .run();
    } else {
      stmt("UPDATE kv SET value = ?, version = version + 1 WHERE ns = ? AND key = ? AND version = ?")
          .bind(value)
          .bind(ns)
          .bind(key)
          .bind(expected_version)
          .run();
    }
    return sqlite3_changes(db_) == 1 ? Cas::ok : Cas::conflict;
  });
}

std::int64_t Store::put(std::string_view ns, std::string_view key, std::string_view value) {
  return transact([&] {
    stmt(
        "INSERT INTO kv(ns, key, value, version) VALUES(?,?,?,1) "
        "ON CONFLICT(ns, key) DO UPDATE SET value = excluded.value, version = version + 1")
        .bind(ns)
        .bind(key)
        .bind(value)
        .run();
    auto& q = stmt("SELECT version FROM kv WHERE ns = ? AND key = ?");
    q.bind(ns).bind(key);
    q.step();
    const auto v = q.i64(0);
    q.reset();
    return v;
  });
}

std::vector<std::pair<std::string, Versioned>> Store::scan(std::string_view ns,
                                                           std::string_view key_prefix) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT key, value, version FROM kv WHERE ns = ? AND key >= ? AND key < ? ORDER BY key");
  // Keys are ASCII, so every key with the prefix sorts below prefix + 0xFF.
  s.bind(ns).bind(key_prefix).bind(std::string(key_prefix) + '\xff');
  std::vector<std::pair<std::string, Versioned>> out;
  while (s.step()) out.push_back({s.text(0), Versioned{s.text(1), s.i64(2)}});
  return out;
}

Cas Store::check_and_assign(std::string_view worker_key, std::string_view assignment,
                            const std::optional<std::string>& guard) {
  return transact([&] {
    auto current = get("assignment", worker_key);
    if (!guard) {
      if (current) return Cas::conflict;
      return compare_and_set("assignment", worker_key, 0, assignment);
    }
    if (!current || current->value != *guard) return Cas::conflict;
    return compare_and_set("assignment", worker_key, current->version, assignment);
  });
}

std::optional<std::string> Store::assignment_of(std::string_view worker_key) {
  auto v = get("assignment", worker_key);
  if (!v) return std::nullopt;
  return v->value;
}

std::int64_t Store::append_judgment(const std::string& run_id, const std::string& block_id,
                                    const Json& body) {
  return transact([&] {
    stmt("INSERT INTO judgments(run_id, block_id, body) VALUES(?,?,?)")
        .bind(run_id)
        .bind(block_id)
        .bind(body.dump())
        .run();
    return static_cast<std::int64_t>(sqlite3_last_insert_rowid(db_));
  });
}

std::vector<StoredJudgment> Store::judgments(const std::string& run_id, std::int64_t after_seq,
                                             std::int64_t limit) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT seq, block_id, body FROM judgments WHERE run_id = ? AND seq > ? ORDER BY seq "
      "LIMIT ?");
  s.bind(run_id).bind(after_seq).bind(limit);
  std::vector<StoredJudgment> out;
  while (s.step()) out.push_back({s.i64(0), s.text(1), Json::parse(s.text(2))});
  return out;
}

std::vector<StoredJudgment> Store::block_judgments(const std::string& run_id,
                                                   const std::string& block_id) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT seq, block_id, body FROM judgments WHERE run_id = ? AND block_id = ? ORDER BY seq");
  s.bind(run_id).bind(block_id);
  std::vector<StoredJudgment> out;
  while (s.step()) out.push_back({s.i64(0), s.text(1), Json::parse(s.text(2))});
  return out;
}

std::int64_t Store::count_judgments(const std::string& run_id) {
  std::lock_guard lock(mu_);
  auto& s = stmt("SELECT COUNT(*) FROM judgments WHERE run_id = ?");
  s.bind(run_id);
  s.step();
  const auto n = s.i64(0);
  s.reset();
  return n;
}

std::int64_t Store::append_audit(const std::string& run_id, std::string_view kind,
                                 const Json& detail, Timestamp at) {
  return transact([&] {
    stmt("INSERT INTO audit(run_id, at, kind, detail) VALUES(?,?,?,?)")
        .bind(run_id)
        .bind(to_epoch_ms(at))
        .bind(kind)
        .bind(detail.dump())
        .run();
    return static_cast<std::int64_t>(sqlite3_last_insert_rowid(db_));
  });
}

std::vector<AuditEvent> Store::audit(const std::string& run_id, std::int64_t after_seq,
                                     std::int64_t limit) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT seq, run_id, at, kind, detail FROM audit WHERE run_id = ? AND seq > ? ORDER BY seq "
      "LIMIT ?");
  s.bind(run_id).bind(after_seq).bind(limit);
  std::vector<AuditEvent> out;
  while (s.step()) {
    out.push_back({s.i64(0), s.text(1), from_epoch_ms(s.i64(2)), s.text(3),
                   Json::parse(s.text(4))});
  }
  return out;
}

void Store::put_share(const ShareRecord& share) {
  transact([&] {
    stmt(
        "INSERT INTO share_tokens(token, workflow_id, run_id, created_at, revoked) "
        "VALUES(?,?,?,?,?)")
        .bind(share.token)
        .bind(share.workflow_id)
        .bind(share.run_id)
        .bind(to_epoch_ms(share.created_at))
        .bind(share.revoked ? 1 : 0)
        .run();
  });
}

std::optional<ShareRecord> Store::get_share(const std::string& token) {
  std::lock_guard lock(mu_);
  auto& s = stmt(
      "SELECT token, workflow_id, run_id, created_at, revoked FROM share_tokens WHERE token = ?");
  s.bind(token);
  if (!s.step()) return std::nullopt;
  ShareRecord r{s.text(0), s.text(1), s.text(2), from_epoch_ms(s.i64(3)), s.i64(4) != 0};
  s.reset();
  return r;
}

bool Store::revoke_share(const std::string& token) {
  return transact([&] {
    stmt("UPDATE share_tokens SET revoked = 1 WHERE token = ?").bind(token).run();
    return sqlite3_changes(db_) == 1;
  });
}

Snapshot Store::snapshot(const std::string& run_id) {
  return transact([&] {
    Snapshot snap;
    snap.run = get_run(run_id);
    snap.blocks = blocks(run_id);
    snap.cache = cache_entries(run_id);
    snap.judgments = judgments(run_id);
    snap.audit = audit(run_id);
    return snap;
  });
}

IntegrityReport Store::integrity_check() {
  std::lock_guard lock(mu_);
  IntegrityReport rep;
  {
    auto& s = stmt("PRAGMA integrity_check");
    while (s.step()) {
      if (s.text(0) != "ok") rep.problems.push_back("sqlite: " + s.text(0));
    }
  }
  {
    auto& s = stmt("SELECT run_id, block_id, output, digest FROM block_cache");
    while (s.step()) {
      if (digest_of(Json::parse(s.text(2))) != s.text(3)) {
        rep.problems.push_back("cache digest mismatch for " + s.text(0) + "/" + s.text(1));
      }
    }
  }
  {
    auto& s = stmt(
        "SELECT b.run_id, b.block_id FROM block_state b LEFT JOIN block_cache c "
        "ON b.run_id = c.run_id AND b.block_id = c.block_id "
        "WHERE b.status = 'done' AND c.digest IS NULL");
    while (s.step()) {
      rep.problems.push_back("block " + s.text(0) + "/" + s.text(1) + " done without cache");
    }
  }
  {
    auto& s = stmt(
        "SELECT r.id FROM runs r WHERE r.status = 'completed' AND EXISTS ("
        "SELECT 1 FROM block_state b LEFT JOIN block_cache c "
        "ON b.run_id = c.run_id AND b.block_id = c.block_id "
        "WHERE b.run_id = r.id AND c.digest IS NULL)");
    while (s.step()) rep.problems.push_back("run " + s.text(0) + " completed with uncached blocks");
  }
  for (const char* sql : {"SELECT body FROM judgments", "SELECT detail FROM audit"}) {
    auto& s = stmt(sql);
    while (s.step()) {
      if (!Json::accept(s.text(0))) rep.problems.push_back("unparseable append-only row");
    }
  }
  return rep;
}

Json Store::export_run(const std::string& run_id) {
  return transact([&] {
    auto run = get_run(run_id);
    if (!run) throw Error(errc::not_found, "unknown run " + run_id);
    Json archive{{"format", "crowdctl-run-archive"}, {"formatVersion", 1}};
    archive["run"] = Json{{"id", run->id},
                          {"workflowId", run->workflow_id},
                          {"workflowVersion", run->workflow_version},
                          {"status", to_string(run->status)},
                          {"config", run->config}};
    if (run->started_at) archive["run"]["startedAt"] = format_utc(*run->started_at);
    if (run->finished_at) archive["run"]["finishedAt"] = format_utc(*run->finished_at);
    archive["workflow"] = get_workflow(run->workflow_id, run->workflow_version).value_or(Json());
    archive["units"] = get_run_units(run_id).value_or(Json::array());
    Json blocks_j = Json::array();
    for (const auto& b : blocks(run_id)) {
      Json bj{{"blockId", b.block_id},
              {"status", to_string(b.status)},
              {"attempts", b.attempts},
              {"cursor", b.cursor},
              {"lastError", b.last_error}};
      if (b.handle) bj["handle"] = *b.handle;
      if (b.intent_token) bj["intentToken"] = *b.intent_token;
      if (b.retry_at) bj["retryAt"] = format_utc(*b.retry_at);
      blocks_j.push_back(std::move(bj));
    }
    archive["blocks"] = blocks_j;
    Json cache = Json::array();
    for (const auto& c : cache_entries(run_id)) {
      cache.push_back(Json{{"blockId", c.block_id},
                           {"output", c.output},
                           {"producedAt", format_utc(c.produced_at)},
                           {"digest", c.digest}});
    }
    archive["cache"] = cache;
    Json js = Json::array();
    for (const auto& j : judgments(run_id)) js.push_back(Json{{"blockId", j.block_id}, {"body", j.body}});
    archive["judgments"] = js;
    Json au = Json::array();
    for (const auto& a : audit(run_id)) {
      au.push_back(Json{{"at", format_utc(a.at)}, {"kind", a.kind}, {"detail", a.detail}});
    }
    archive["audit"] = au;
    return archive;
  });
}

void Store::import_run(const Json& a) {
  if (!a.is_object() || a.value("format", "") != "crowdctl-run-archive") {
    throw Error(errc::parse_error, "not a run archive");
  }
  transact([&] {
    const Json& r = a.at("run");
    RunRecord run;
    run.id = r.at("id").get<std::string>();
    run.workflow_id = r.at("workflowId").get<std::string>();
    run.workflow_version = r.at("workflowVersion").get<int>();
    run.status = run_status_from_string(r.at("status").get<std::string>());
    run.config = r.at("config");
    if (r.contains("startedAt")) run.started_at = parse_utc(r["startedAt"].get<std::string>());
    if (r.contains("finishedAt")) run.finished_at = parse_utc(r["finishedAt"].get<std::string>());
    if (!a.at("workflow").is_null() &&
        !get_workflow(run.workflow_id, run.workflow_version)) {
      put_workflow(run.workflow_id, run.workflow_version, a["workflow"],
                   run.started_at.value_or(Timestamp{}));
    }
    create_run(run);
    put_run_units(run.id, a.at("units"));
    for (const auto& bj : a.at("blocks")) {
      BlockRecord b;
      b.block_id = bj.at("blockId").get<std::string>();
      b.status = block_status_from_string(bj.at("status").get<std::string>());
      b.attempts = bj.at("attempts").get<int>();
      b.cursor = bj.at("cursor").get<std::string>();
      b.last_error = bj.at("lastError").get<std::string>();
      if (bj.contains("handle")) b.handle = bj["handle"];
      if (bj.contains("intentToken")) b.intent_token = bj["intentToken"].get<std::string>();
      if (bj.contains("retryAt")) b.retry_at = parse_utc(bj["retryAt"].get<std::string>());
      put_block(run.id, b);
    }
    for (const auto& c : a.at("cache")) {
      auto res = put_once(run.id, c.at("blockId").get<std::string>(), c.at("output"),
                          parse_utc(c.at("producedAt").get<std::string>()));
      if (res.digest != c.at("digest").get<std::string>()) {
        throw Error(errc::parse_error, "archive cache digest mismatch");
      }
    }
    for (const auto& j : a.at("judgments")) {
      append_judgment(run.id, j.at("blockId").get<std::string>(), j.at("body"));
    }
    for (const auto& e : a.at("audit")) {
      append_audit(run.id, e.at("kind").get<std::string>(), e.at("detail"),
                   parse_utc(e.at("at").get<std::string>()));
    }
  });
}

}  // namespace crowdctl::store
