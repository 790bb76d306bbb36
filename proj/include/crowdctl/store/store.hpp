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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"

struct sqlite3;
struct sqlite3_stmt;

namespace crowdctl::store {

enum class RunStatus { created, running, paused, completed, failed, cancelled };
enum class BlockStatus { pending, publishing, collecting, transforming, done, failed };

std::string_view to_string(RunStatus s);
RunStatus run_status_from_string(std::string_view s);
std::string_view to_string(BlockStatus s);
BlockStatus block_status_from_string(std::string_view s);

struct RunRecord {
  std::string id;
  std::string workflow_id;
  int workflow_version = 0;
  RunStatus status = RunStatus::created;
  std::optional<Timestamp> started_at;
  std::optional<Timestamp> finished_at;
  Json config = Json::object();  // adapter, toggles, seed, secret

  bool operator==(const RunRecord&) const = default;
};

struct BlockRecord {
  std::string block_id;
  BlockStatus status = BlockStatus::pending;
  int attempts = 0;
  std::optional<Json> handle;             // TaskHandle once published
  std::optional<std::string> intent_token;  // written before publish
  std::string cursor;                     // fetch_judgments position
  std::optional<Timestamp> retry_at;
  std::string last_error;

  bool operator==(const BlockRecord&) const = default;
};

struct CacheEntry {
  std::string run_id;
  std::string block_id;
  Json output;
  Timestamp produced_at;
  std::string digest;
};

enum class PutOnce { ok, already_exists };

struct PutOnceResult {
  PutOnce outcome;
  std::string digest;  // digest of the stored value (the winner's)
};

enum class Cas { ok, conflict };

struct Versioned {
  std::string value;
  std::int64_t version = 0;
};

struct StoredJudgment {
  std::int64_t seq = 0;
  std::string block_id;
  Json body;
};

struct AuditEvent {
  std::int64_t seq = 0;
  std::string run_id;
  Timestamp at;
  std::string kind;
  Json detail;
};

struct ShareRecord {
  std::string token;
  std::string workflow_id;
  std::string run_id;
  Timestamp created_at;
  bool revoked = false;
};

// Consistent read view of one run, materialized inside a single read
// transaction.
struct Snapshot {
  std::optional<RunRecord> run;
  std::vector<BlockRecord> blocks;
  std::vector<CacheEntry> cache;
  std::vector<StoredJudgment> judgments;
  std::vector<AuditEvent> audit;
};

struct IntegrityReport {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

std::string digest_of(const Json& value);

// Embedded transactional store (SQLite). One connection guarded by a
// recursive mutex; `transact` groups calls into one atomic unit. Cache,
// judgment, audit and workflow-version rows are protected against update
// and delete by triggers, so append-only and write-once hold even against
// raw SQL.
class Store {
 public:
  // ":memory:" for a private in-memory database, otherwise a file path
  // (opened in WAL mode).
  explicit Store(const std::string& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::string& path() const { return path_; }

  template <typename F>
  auto transact(F&& f) -> decltype(f()) {
    std::lock_guard lock(mu_);
    Tx tx(*this);
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      tx.commit();
    } else {
      auto r = f();
      tx.commit();
      return r;
    }
  }

  // Workflows: (id, version) rows are immutable.
  void put_workflow(const std::string& id, int version, const Json& body, Timestamp at);
  std::optional<Json> get_workflow(const std::string& id, int version);
  std::optional<int> latest_workflow_version(const std::string& id);
  std::vector<std::pair<std::string, int>> list_workflows();

  void create_run(const RunRecord& run);
  std::optional<RunRecord> get_run(const std::string& id);
  void update_run(const RunRecord& run);
  std::vector<std::string> list_runs();

  void put_run_units(const std::string& run_id, const Json& units);
  std::optional<Json> get_run_units(const std::string& run_id);

  void put_block(const std::string& run_id, const BlockRecord& block);
  std::optional<BlockRecord> get_block(const std::string& run_id, const std::string& block_id);
  std::vector<BlockRecord> blocks(const std::string& run_id);

  // Write-once block cache. A second writer gets already-exists plus the
  // stored digest; storage failures throw StorageError instead.
  PutOnceResult put_once(const std::string& run_id, const std::string& block_id,
                         const Json& output, Timestamp at);
  std::optional<CacheEntry> get_cache(const std::string& run_id, const std::string& block_id);
  std::vector<CacheEntry> cache_entries(const std::string& run_id);

  // Versioned cells. `expected_version` 0 means "must not exist yet".
  std::optional<Versioned> get(std::string_view ns, std::string_view key);
  Cas compare_and_set(std::string_view ns, std::string_view key, std::int64_t expected_version,
                      std::string_view value);
  // Unconditional write; returns the new version.
  std::int64_t put(std::string_view ns, std::string_view key, std::string_view value);
  std::vector<std::pair<std::string, Versioned>> scan(std::string_view ns,
                                                      std::string_view key_prefix);

  // Compare-and-set on a worker's assignment field. `guard` is the expected
  // prior assignment; nullopt means "unassigned".
  Cas check_and_assign(std::string_view worker_key, std::string_view assignment,
                       const std::optional<std::string>& guard);
  std::optional<std::string> assignment_of(std::string_view worker_key);

  std::int64_t append_judgment(const std::string& run_id, const std::string& block_id,
                               const Json& body);
  std::vector<StoredJudgment> judgments(const std::string& run_id, std::int64_t after_seq = 0,
                                        std::int64_t limit = -1);
  std::vector<StoredJudgment> block_judgments(const std::string& run_id,
                                              const std::string& block_id);
  std::int64_t count_judgments(const std::string& run_id);

  std::int64_t append_audit(const std::string& run_id, std::string_view kind, const Json& detail,
                            Timestamp at);
  std::vector<AuditEvent> audit(const std::string& run_id, std::int64_t after_seq = 0,
                                std::int64_t limit = -1);

  void put_share(const ShareRecord& share);
  std::optional<ShareRecord> get_share(const std::string& token);
  bool revoke_share(const std::string& token);

  Snapshot snapshot(const std::string& run_id);
  IntegrityReport integrity_check();

  // Whole-run archive: workflow version, units, blocks, cache, judgments
  // and audit trail.
  Json export_run(const std::string& run_id);
  void import_run(const Json& archive);

 private:
  class Stmt;
  class Tx {
   public:
    explicit Tx(Store& s);
    ~Tx();
    void commit();

   private:
    Store& s_;
    bool outer_;
    bool done_ = false;
  };

  Stmt& stmt(const char* sql);
  void exec(const char* sql);
  void migrate();

  std::string path_;
  sqlite3* db_ = nullptr;
  std::recursive_mutex mu_;
  int depth_ = 0;
  std::map<const char*, std::unique_ptr<Stmt>> stmts_;
};

}  // namespace crowdctl::store
