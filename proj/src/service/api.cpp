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

#include "crowdctl/service/api.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "crowdctl/analysis/bias.hpp"
#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"
#include "crowdctl/common/violation.hpp"
#include "crowdctl/orchestrator/reporting.hpp"
#include "crowdctl/orchestrator/simulation.hpp"
#include "crowdctl/platform/population.hpp"
#include "crowdctl/workflow/codec.hpp"
#include "crowdctl/workflow/graph.hpp"

namespace crowdctl::service {

using store::RunStatus;

namespace {

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string_view::npos ? path.size() : j;
    if (end > i) out.emplace_back(path.substr(i, end - i));
    i = end;
  }
  return out;
}

bool match(const std::string& pattern, const std::vector<std::string>& segs,
           std::map<std::string, std::string>& params) {
  const auto pat = split_path(pattern);
  if (pat.size() != segs.size()) return false;
  std::map<std::string, std::string> found;
  for (std::size_t i = 0; i < pat.size(); ++i) {
    if (pat[i].size() > 2 && pat[i].front() == '{' && pat[i].back() == '}') {
      found[pat[i].substr(1, pat[i].size() - 2)] = segs[i];
    } else if (pat[i] != segs[i]) {
      return false;
    }
  }
  params = std::move(found);
  return true;
}

Response json_response(int status, Json payload) {
  payload["apiVersion"] = kApiVersion;
  return Response{status, payload.dump(), "application/json"};
}

Json violations_json(const Violations& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) {
    arr.push_back(Json{{"code", v.code}, {"message", v.message}, {"subject", v.subject}});
  }
  return arr;
}

Response error_response(const Error& e) {
  Json err{{"code", e.code()}, {"message", e.what()}};
  if (const auto* vf = dynamic_cast<const ValidationFailed*>(&e)) {
    err["violations"] = violations_json(vf->violations());
  }
  return json_response(status_for(e.code()), Json{{"error", err}});
}

Json body_json(const Request& req, bool allow_empty = false) {
  if (req.body.empty() || req.body.find_first_not_of(" \t\r\n") == std::string::npos) {
    if (allow_empty) return Json::object();
    throw Error(errc::invalid_argument, "request body is empty");
  }
  Json j = parse_json(req.body, "request body");
  if (!j.is_object()) throw Error(errc::invalid_argument, "request body must be a JSON object");
  return j;
}

std::int64_t query_int(const Request& req, const std::string& name, std::int64_t fallback) {
  auto it = req.query.find(name);
  if (it == req.query.end()) return fallback;
  std::int64_t v = 0;
  const auto* b = it->second.data();
  const auto* e = b + it->second.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) {
    throw Error(errc::invalid_argument, "query parameter " + name + " must be an integer");
  }
  return v;
}

bool query_bool(const Request& req, const std::string& name, bool fallback) {
  auto it = req.query.find(name);
  if (it == req.query.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw Error(errc::invalid_argument, "query parameter " + name + " must be true or false");
}

// Violations for a design-time document. Bindings are only checked when a
// unit schema is known.
workflow::ValidationResult design_check(const workflow::WorkflowDef& def,
                                        const std::optional<std::set<std::string>>& schema,
                                        const std::set<std::string>& extra_ops) {
  auto res = workflow::validate_workflow(def, schema.value_or(std::set<std::string>{}), extra_ops);
  if (!schema) {
    std::erase_if(res.violations, [](const Violation& v) { return v.code == "unresolved-binding"; });
  }
  return res;
}

Json run_json(const store::RunRecord& run) {
  Json config = run.config;
  config.erase("secret");
  Json j{{"id", run.id},
         {"workflowId", run.workflow_id},
         {"workflowVersion", run.workflow_version},
         {"status", store::to_string(run.status)},
         {"config", config}};
  j["startedAt"] = run.started_at ? Json(format_utc(*run.started_at)) : Json(nullptr);
  j["finishedAt"] = run.finished_at ? Json(format_utc(*run.finished_at)) : Json(nullptr);
  return j;
}

store::RunRecord require_run(store::Store& store, const std::string& id) {
  auto run = store.get_run(id);
  if (!run) throw Error(errc::not_found, "unknown run " + id);
  return *run;
}

}  // namespace

int status_for(std::string_view code) {
  if (code == errc::not_found) return 404;
  if (code == errc::forbidden) return 403;
  if (code == errc::unauthorized) return 401;
  if (code == errc::conflict || code == errc::invalid_state ||
      code == errc::definition_unavailable || code == errc::protocol_violation) {
    return 409;
  }
  if (code == errc::validation_failed || code == errc::cycle || code == errc::no_factors ||
      code == errc::unsupported_element || code == errc::degenerate_reference) {
    return 422;
  }
  if (code == errc::invalid_argument || code == errc::parse_error) return 400;
  if (code == errc::adapter_failure) return 502;
  if (code == errc::storage) return 503;
  return 500;
}

struct Api::Access {
  std::optional<store::ShareRecord> share;
};

Api::Api(store::Store& store, const Clock& clock, platform::AdapterRegistry& adapters,
         ApiOptions options)
    : store_(store),
      clock_(clock),
      adapters_(adapters),
      options_(std::move(options)),
      workers_(store, clock),
      engine_(store, adapters, clock, &workers_) {
  build_routes();
}

Api::~Api() = default;

const std::vector<RouteInfo>& Api::routes() {
  static const std::vector<RouteInfo> table = {
      {"GET", "/health", false, true},
      {"GET", "/workflows", false, false},
      {"POST", "/workflows", true, false},
      {"GET", "/workflows/{id}", false, false},
      {"PUT", "/workflows/{id}", true, false},
      {"POST", "/workflows/{id}/validate", true, false},
      {"POST", "/workflows/{id}/runs", true, false},
      {"POST", "/workflows/{id}/share", true, false},
      {"GET", "/runs", false, false},
      {"GET", "/runs/{id}", false, false},
      {"POST", "/runs/{id}/pause", true, false},
      {"POST", "/runs/{id}/resume", true, false},
      {"POST", "/runs/{id}/cancel", true, false},
      {"POST", "/runs/{id}/eligibility", true, true},
      {"GET", "/runs/{id}/report", false, false},
      {"GET", "/runs/{id}/audit", false, false},
      {"PUT", "/runs/{id}/quotas", true, false},
      {"GET", "/runs/{id}/schedule-state", false, false},
      {"GET", "/share/{token}", false, true},
      {"DELETE", "/share/{token}", true, false},
  };
  return table;
}

void Api::build_routes() {
  const std::map<std::string, Handler> handlers = {
      {"GET /health", [](const Request&, const Params&) { return json_response(200, {{"status", "ok"}}); }},
      {"GET /workflows", [this](const Request& r, const Params& p) { return list_workflows(r, p); }},
      {"POST /workflows", [this](const Request& r, const Params& p) { return create_workflow(r, p); }},
      {"GET /workflows/{id}", [this](const Request& r, const Params& p) { return get_workflow(r, p); }},
      {"PUT /workflows/{id}", [this](const Request& r, const Params& p) { return put_workflow(r, p); }},
      {"POST /workflows/{id}/validate",
       [this](const Request& r, const Params& p) { return validate_workflow(r, p); }},
      {"POST /workflows/{id}/runs", [this](const Request& r, const Params& p) { return start_run(r, p); }},
      {"POST /workflows/{id}/share", [this](const Request& r, const Params& p) { return share(r, p); }},
      {"GET /runs", [this](const Request& r, const Params& p) { return list_runs(r, p); }},
      {"GET /runs/{id}", [this](const Request& r, const Params& p) { return get_run(r, p); }},
      {"POST /runs/{id}/pause", [this](const Request& r, const Params& p) { return pause_run(r, p); }},
      {"POST /runs/{id}/resume", [this](const Request& r, const Params& p) { return resume_run(r, p); }},
      {"POST /runs/{id}/cancel", [this](const Request& r, const Params& p) { return cancel_run(r, p); }},
      {"POST /runs/{id}/eligibility",
       [this](const Request& r, const Params& p) { return eligibility(r, p); }},
      {"GET /runs/{id}/report", [this](const Request& r, const Params& p) { return report(r, p); }},
      {"GET /runs/{id}/audit", [this](const Request& r, const Params& p) { return audit(r, p); }},
      {"PUT /runs/{id}/quotas", [this](const Request& r, const Params& p) { return put_quotas(r, p); }},
      {"GET /runs/{id}/schedule-state",
       [this](const Request& r, const Params& p) { return schedule_state(r, p); }},
      {"GET /share/{token}", [this](const Request& r, const Params& p) { return view_share(r, p); }},
      {"DELETE /share/{token}", [this](const Request& r, const Params& p) { return revoke_share(r, p); }},
  };
  for (const auto& info : routes()) {
    routes_.push_back(Route{info, handlers.at(info.method + " " + info.pattern)});
  }
}

Api::Access Api::authorize(const Request& req, const RouteInfo& route, const Params& params) {
  Access access;
  if (auto it = req.headers.find(std::string(kShareHeader)); it != req.headers.end()) {
    auto rec = store_.get_share(it->second);
    if (!rec) throw Error(errc::forbidden, "unknown share token");
    if (rec->revoked) throw Error(errc::forbidden, "share token has been revoked");
    if (route.mutating) throw Error(errc::forbidden, "share tokens grant read-only access");
    // A share covers one workflow (and optionally one run) only.
    auto id = params.find("id");
    const bool workflow_route = route.pattern.starts_with("/workflows/");
    const bool run_route = route.pattern.starts_with("/runs/");
    bool in_scope = route.pattern == "/health" || route.pattern == "/share/{token}";
    if (workflow_route && id != params.end()) in_scope = id->second == rec->workflow_id;
    if (run_route && id != params.end()) {
      auto run = store_.get_run(id->second);
      in_scope = run && run->workflow_id == rec->workflow_id &&
                 (rec->run_id.empty() || rec->run_id == run->id);
    }
    if (!in_scope) throw Error(errc::forbidden, "resource is outside the shared workflow");
    access.share = rec;
    return access;
  }
  if (route.public_route || options_.api_key.empty()) return access;
  auto auth = req.headers.find("authorization");
  const std::string expected = "Bearer " + options_.api_key;
  if (auth == req.headers.end() || !constant_time_equal(auth->second, expected)) {
    throw Error(errc::unauthorized, "missing or invalid requester key");
  }
  return access;
}

Response Api::handle(const Request& req) {
  try {
    const auto segs = split_path(req.path);
    bool path_known = false;
    for (const auto& route : routes_) {
      Params params;
      if (!match(route.info.pattern, segs, params)) continue;
      path_known = true;
      if (route.info.method != req.method) continue;
      authorize(req, route.info, params);
      return route.handler(req, params);
    }
    if (path_known) {
      return json_response(405, Json{{"error",
                                      {{"code", "method-not-allowed"},
                                       {"message", req.method + " is not allowed on " + req.path}}}});
    }
    throw Error(errc::not_found, "no route for " + req.method + " " + req.path);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const nlohmann::json::exception& e) {
    return error_response(Error(errc::invalid_argument, e.what()));
  } catch (const std::exception& e) {
    return json_response(500, Json{{"error", {{"code", "internal"}, {"message", e.what()}}}});
  }
}

orchestrator::RunController& Api::controller(const std::string& run_id) {
  std::lock_guard lock(mu_);
  auto it = controllers_.find(run_id);
  if (it != controllers_.end()) return *it->second;
  require_run(store_, run_id);
  auto ctl = std::make_unique<orchestrator::RunController>(store_, engine_, workers_, clock_, run_id);
  return *controllers_.emplace(run_id, std::move(ctl)).first->second;
}

std::vector<std::string> Api::live_runs() {
  std::vector<std::string> out;
  for (const auto& id : store_.list_runs()) {
    auto run = store_.get_run(id);
    if (!run || (run->status != RunStatus::running && run->status != RunStatus::paused)) continue;
    if (run->config.value("adapter", "") == "sim") continue;
    if (!adapters_.contains(run->config.value("adapter", ""))) continue;
    out.push_back(id);
  }
  return out;
}

void Api::tick() {
  const Timestamp now = clock_.now();
  for (const auto& id : live_runs()) {
    auto& ctl = controller(id);
    ctl.tick(now);
    // Bounded so one busy run cannot starve the others.
    for (int i = 0; i < 1000; ++i) {
      if (engine_.execute_next(id) != engine::StepOutcome::advanced) break;
    }
  }
}

Response Api::list_workflows(const Request&, const Params&) {
  Json arr = Json::array();
  for (const auto& [id, version] : store_.list_workflows()) {
    arr.push_back(Json{{"id", id}, {"latestVersion", version}});
  }
  return json_response(200, Json{{"workflows", arr}});
}

Response Api::create_workflow(const Request& req, const Params&) {
  auto def = workflow::workflow_from_json(body_json(req));
  if (def.id.empty()) def.id = "wf-" + random_token_hex(4);
  def.version = 1;
  const auto res = design_check(def, std::nullopt, engine_.transforms().extra_ops());
  if (!res.ok()) throw ValidationFailed(res.violations);
  if (store_.latest_workflow_version(def.id)) {
    throw Error(errc::conflict, "workflow " + def.id + " already exists; PUT a new version");
  }
  store_.put_workflow(def.id, def.version, workflow::to_json(def), clock_.now());
  return json_response(201, Json{{"id", def.id}, {"version", def.version}});
}

Response Api::get_workflow(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  const auto latest = store_.latest_workflow_version(id);
  if (!latest) throw Error(errc::not_found, "unknown workflow " + id);
  const auto version = static_cast<int>(query_int(req, "version", *latest));
  auto body = store_.get_workflow(id, version);
  if (!body) throw Error(errc::not_found, "workflow " + id + " has no version " + std::to_string(version));
  return json_response(200, Json{{"id", id}, {"version", version}, {"latestVersion", *latest}, {"workflow", *body}});
}

Response Api::put_workflow(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  auto def = workflow::workflow_from_json(body_json(req));
  if (!def.id.empty() && def.id != id) {
    throw Error(errc::invalid_argument, "body id " + def.id + " does not match path id " + id);
  }
  const auto latest = store_.latest_workflow_version(id);
  if (!latest) throw Error(errc::not_found, "unknown workflow " + id);
  def.id = id;
  def.version = *latest + 1;
  const auto res = design_check(def, std::nullopt, engine_.transforms().extra_ops());
  if (!res.ok()) throw ValidationFailed(res.violations);
  store_.put_workflow(def.id, def.version, workflow::to_json(def), clock_.now());
  return json_response(200, Json{{"id", def.id}, {"version", def.version}});
}

Response Api::validate_workflow(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  Json body = body_json(req, true);
  ObjectReader r(body, "validate");
  workflow::WorkflowDef def;
  if (const Json* draft = r.optional_json("workflow")) {
    def = workflow::workflow_from_json(*draft);
  } else {
    const auto latest = store_.latest_workflow_version(id);
    if (!latest) throw Error(errc::not_found, "unknown workflow " + id);
    def = workflow::workflow_from_json(*store_.get_workflow(id, *latest));
  }
  std::optional<std::set<std::string>> schema;
  Violations unit_violations;
  if (const Json* units = r.optional_json("units")) {
    const auto us = workflow::units_from_json(*units);
    schema = workflow::unit_schema_of(us);
    unit_violations = workflow::validate_units(def, us);
  }
  if (const Json* fields = r.optional_json("unitSchema")) {
    std::set<std::string> s = schema.value_or(std::set<std::string>{});
    if (!fields->is_array()) throw Error(errc::invalid_argument, "validate.unitSchema must be an array");
    for (const auto& f : *fields) {
      if (!f.is_string()) throw Error(errc::invalid_argument, "validate.unitSchema entries must be strings");
      s.insert(f.get<std::string>());
    }
    schema = std::move(s);
  }
  r.finish();
  auto res = design_check(def, schema, engine_.transforms().extra_ops());
  res.violations.insert(res.violations.end(), unit_violations.begin(), unit_violations.end());
  return json_response(200, Json{{"valid", res.ok()},
                                 {"bindingsChecked", schema.has_value()},
                                 {"violations", violations_json(res.violations)}});
}

Response Api::start_run(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  Json body = body_json(req);
  ObjectReader r(body, "run");
  const auto adapter = r.required<std::string>("adapter");
  const auto latest = store_.latest_workflow_version(id);
  if (!latest) throw Error(errc::not_found, "unknown workflow " + id);
  const int version = r.value_or<int>("version", *latest);
  auto stored = store_.get_workflow(id, version);
  if (!stored) throw Error(errc::not_found, "workflow " + id + " has no version " + std::to_string(version));
  const auto def = workflow::workflow_from_json(*stored);

  std::vector<workflow::DataUnit> units;
  const Json* inline_units = r.optional_json("units");
  const auto units_ref = r.optional<std::string>("unitsRef");
  if (inline_units && units_ref) throw Error(errc::invalid_argument, "give units or unitsRef, not both");
  if (inline_units) {
    units = workflow::units_from_json(*inline_units);
  } else if (units_ref) {
    units = workflow::units_from_json(parse_json(read_file(*units_ref), *units_ref));
  } else {
    throw Error(errc::invalid_argument, "run needs units or unitsRef");
  }
  engine::Toggles toggles;
  if (const Json* t = r.optional_json("toggles")) toggles = engine::toggles_from_json(*t);
  const auto seed = r.value_or<std::uint64_t>("seed", 1);
  const Json* profile = r.optional_json("profile");
  const auto horizon_hours = r.optional<int>("horizonHours");
  r.finish();

  if (adapter == "sim") {
    orchestrator::SimulationConfig cfg;
    cfg.def = def;
    cfg.units = std::move(units);
    cfg.profile = profile ? platform::profile_from_json(*profile) : platform::default_profile();
    const auto pv = platform::validate_profile(cfg.profile);
    if (!pv.empty()) throw ValidationFailed(pv);
    cfg.toggles = toggles;
    cfg.seed = seed;
    if (horizon_hours) {
      if (*horizon_hours < 1) throw Error(errc::invalid_argument, "horizonHours must be >= 1");
      cfg.horizon = std::chrono::hours(*horizon_hours);
    }
    cfg.store = &store_;
    const auto result = orchestrator::run_simulation(cfg);
    return json_response(201, Json{{"runId", result.run_id},
                                   {"status", store::to_string(result.status)},
                                   {"judgments", result.judgments.size()},
                                   {"simulatedUntil", format_utc(result.finished_at)}});
  }
  if (profile || horizon_hours) {
    throw Error(errc::invalid_argument, "profile and horizonHours apply to the sim adapter only");
  }
  if (!adapters_.contains(adapter)) throw Error(errc::invalid_argument, "unknown adapter " + adapter);
  engine::RunOptions options;
  options.adapter = adapter;
  options.seed = seed;
  options.toggles = toggles;
  std::string run_id;
  {
    std::lock_guard lock(mu_);
    run_id = engine_.start_run(def, units, options).id;
  }
  controller(run_id);
  return json_response(201, Json{{"runId", run_id}, {"status", "running"}});
}

Response Api::list_runs(const Request& req, const Params&) {
  auto wf = req.query.find("workflowId");
  Json arr = Json::array();
  for (const auto& id : store_.list_runs()) {
    auto run = store_.get_run(id);
    if (!run) continue;
    if (wf != req.query.end() && run->workflow_id != wf->second) continue;
    arr.push_back(run_json(*run));
  }
  return json_response(200, Json{{"runs", arr}});
}

Response Api::get_run(const Request&, const Params& p) {
  const auto& id = p.at("id");
  const auto run = require_run(store_, id);
  controller(id);
  Json progress = Json::array();
  for (const auto& b : engine_.progress(id)) progress.push_back(engine::to_json(b));
  Json out = run_json(*store_.get_run(id));
  out["progress"] = progress;
  out["judgments"] = store_.count_judgments(id);
  out["groupAssignments"] = workers_.group_assignment_counts(id);
  return json_response(200, Json{{"run", out}});
}

Response Api::pause_run(const Request&, const Params& p) {
  const auto& id = p.at("id");
  const auto run = require_run(store_, id);
  if (run.status != RunStatus::running && run.status != RunStatus::paused) {
    throw Error(errc::invalid_state, "run " + id + " is " + std::string(store::to_string(run.status)));
  }
  controller(id).user_pause();
  return json_response(200, Json{{"run", run_json(*store_.get_run(id))}});
}

Response Api::resume_run(const Request&, const Params& p) {
  const auto& id = p.at("id");
  const auto run = require_run(store_, id);
  if (run.status != RunStatus::running && run.status != RunStatus::paused) {
    throw Error(errc::invalid_state, "run " + id + " is " + std::string(store::to_string(run.status)));
  }
  controller(id).user_resume();
  return json_response(200, Json{{"run", run_json(*store_.get_run(id))}});
}

Response Api::cancel_run(const Request&, const Params& p) {
  const auto& id = p.at("id");
  const auto run = require_run(store_, id);
  if (run.status != RunStatus::running && run.status != RunStatus::paused) {
    throw Error(errc::invalid_state, "run " + id + " is " + std::string(store::to_string(run.status)));
  }
  controller(id);
  engine_.cancel_run(id);
  return json_response(200, Json{{"run", run_json(*store_.get_run(id))}});
}

Response Api::eligibility(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  Json body = body_json(req);
  ObjectReader r(body, "eligibility");
  const auto platform_id = r.required<std::string>("platformWorkerId");
  const auto fingerprint = r.value_or<std::string>("fingerprint", "");
  const auto country = r.value_or<std::string>("country", "");
  const auto block_id = r.required<std::string>("blockId");
  const auto token = r.required<std::string>("token");
  r.finish();
  require_run(store_, id);
  const auto d = controller(id).eligibility(platform_id, fingerprint, country, block_id, token);
  Json out{{"action", workers::to_string(d.action)},
           {"reason", workers::to_string(d.reason)},
           {"message", d.message}};
  out["group"] = d.group_id ? Json(*d.group_id) : Json(nullptr);
  out["block"] = d.block_id ? Json(*d.block_id) : Json(nullptr);
  return json_response(200, out);
}

Response Api::report(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  analysis::ReportConfig cfg;
  cfg.generated_at = clock_.now();
  cfg.per_condition = query_bool(req, "perCondition", false);
  cfg.top_k = static_cast<int>(query_int(req, "topK", 3));
  if (auto it = req.query.find("cleanup"); it != req.query.end()) {
    cfg.cleanup.clear();
    std::stringstream ss(it->second);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) cfg.cleanup.insert(analysis::cleanup_policy_from_string(item));
    }
  }
  const std::string format = req.query.contains("format") ? req.query.at("format") : "json";
  if (format != "json" && format != "text") {
    throw Error(errc::invalid_argument, "format must be json or text");
  }
  const auto rep = orchestrator::run_report(store_, id, cfg);
  if (format == "text") return Response{200, analysis::to_text(rep), "text/plain; charset=utf-8"};
  return json_response(200, Json{{"report", analysis::to_json(rep)}});
}

Response Api::audit(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  require_run(store_, id);
  const auto after = query_int(req, "after", 0);
  const auto limit = query_int(req, "limit", 100);
  if (limit < 1 || limit > options_.audit_page_max) {
    throw Error(errc::invalid_argument,
                "limit must be in [1, " + std::to_string(options_.audit_page_max) + "]");
  }
  // One extra row tells whether another page exists.
  auto events = store_.audit(id, after, limit + 1);
  const bool more = static_cast<std::int64_t>(events.size()) > limit;
  if (more) events.pop_back();
  Json arr = Json::array();
  for (const auto& e : events) {
    arr.push_back(Json{{"seq", e.seq}, {"at", format_utc(e.at)}, {"kind", e.kind}, {"detail", e.detail}});
  }
  Json out{{"events", arr}, {"hasMore", more}};
  out["nextAfter"] = events.empty() ? Json(nullptr) : Json(events.back().seq);
  return json_response(200, out);
}

Response Api::share(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  if (!store_.latest_workflow_version(id)) throw Error(errc::not_found, "unknown workflow " + id);
  Json body = body_json(req, true);
  ObjectReader r(body, "share");
  const auto run_id = r.value_or<std::string>("runId", "");
  r.finish();
  if (!run_id.empty()) {
    const auto run = require_run(store_, run_id);
    if (run.workflow_id != id) throw Error(errc::invalid_argument, "run " + run_id + " belongs to another workflow");
  }
  store::ShareRecord rec;
  rec.token = random_token_hex(16);
  rec.workflow_id = id;
  rec.run_id = run_id;
  rec.created_at = clock_.now();
  store_.put_share(rec);
  const std::string path = "/share/" + rec.token;
  return json_response(201, Json{{"token", rec.token},
                                 {"url", options_.public_base_url + path},
                                 {"workflowId", id},
                                 {"runId", run_id},
                                 {"scope", "read-only"}});
}

Response Api::revoke_share(const Request&, const Params& p) {
  const auto& token = p.at("token");
  if (!store_.get_share(token)) throw Error(errc::not_found, "unknown share token");
  store_.revoke_share(token);
  return json_response(200, Json{{"token", token}, {"revoked", true}});
}

Response Api::view_share(const Request&, const Params& p) {
  auto rec = store_.get_share(p.at("token"));
  if (!rec) throw Error(errc::forbidden, "unknown share token");
  if (rec->revoked) throw Error(errc::forbidden, "share token has been revoked");
  const auto latest = store_.latest_workflow_version(rec->workflow_id);
  if (!latest) throw Error(errc::not_found, "shared workflow no longer exists");
  Json out{{"readOnly", true},
           {"workflowId", rec->workflow_id},
           {"version", *latest},
           {"workflow", *store_.get_workflow(rec->workflow_id, *latest)}};
  Json runs = Json::array();
  for (const auto& id : store_.list_runs()) {
    auto run = store_.get_run(id);
    if (!run || run->workflow_id != rec->workflow_id) continue;
    if (!rec->run_id.empty() && rec->run_id != id) continue;
    runs.push_back(run_json(*run));
  }
  out["runs"] = runs;
  return json_response(200, out);
}

Response Api::put_quotas(const Request& req, const Params& p) {
  const auto& id = p.at("id");
  const auto run = require_run(store_, id);
  if (run.status != RunStatus::running && run.status != RunStatus::paused) {
    throw Error(errc::invalid_state, "run " + id + " is " + std::string(store::to_string(run.status)));
  }
  const auto q = workers::quotas_from_json(body_json(req));
  controller(id).request_quota_edit(q);
  return json_response(202, Json{{"pending", workers::to_json(q)}, {"appliesAt", "next-checkpoint"}});
}

Response Api::schedule_state(const Request&, const Params& p) {
  const auto& id = p.at("id");
  require_run(store_, id);
  return json_response(200, controller(id).state_json());
}

}  // namespace crowdctl::service
