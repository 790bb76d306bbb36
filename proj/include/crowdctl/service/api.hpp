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

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "crowdctl/common/json.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/engine/engine.hpp"
#include "crowdctl/orchestrator/controller.hpp"
#include "crowdctl/platform/adapter.hpp"
#include "crowdctl/store/store.hpp"
#include "crowdctl/workers/manager.hpp"

namespace crowdctl::service {

inline constexpr int kApiVersion = 1;
inline constexpr std::string_view kShareHeader = "x-share-token";

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lowercase names
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  Json json() const { return Json::parse(body); }
};

struct RouteInfo {
  std::string method;
  std::string pattern;  // "{id}" / "{token}" segments are parameters
  bool mutating = false;
  // Reachable without the requester key: the task-page hook and share views.
  bool public_route = false;
};

struct ApiOptions {
  // When non-empty, requester routes need "Authorization: Bearer <key>".
  std::string api_key;
  // Prefix for share URLs; empty gives relative URLs.
  std::string public_base_url;
  int audit_page_max = 1000;
};

// Framework-independent HTTP API: routing, authorization, strict JSON
// input and versioned JSON output. The HTTP server and the tests both call
// `handle`.
class Api {
 public:
  Api(store::Store& store, const Clock& clock, platform::AdapterRegistry& adapters,
      ApiOptions options = {});
  ~Api();

  Response handle(const Request& req);

  // Advances every live run: a scheduler tick, then engine steps until the
  // run is idle. Simulated runs complete inside their start request and are
  // never live.
  void tick();

  static const std::vector<RouteInfo>& routes();

 private:
  using Params = std::map<std::string, std::string>;
  using Handler = std::function<Response(const Request&, const Params&)>;
  struct Route {
    RouteInfo info;
    Handler handler;
  };
  struct Access;

  void build_routes();
  Access authorize(const Request& req, const RouteInfo& route, const Params& params);
  orchestrator::RunController& controller(const std::string& run_id);
  std::vector<std::string> live_runs();

  Response list_workflows(const Request&, const Params&);
  Response create_workflow(const Request&, const Params&);
  Response get_workflow(const Request&, const Params&);
  Response put_workflow(const Request&, const Params&);
  Response validate_workflow(const Request&, const Params&);
  Response start_run(const Request&, const Params&);
  Response list_runs(const Request&, const Params&);
  Response get_run(const Request&, const Params&);
  Response pause_run(const Request&, const Params&);
  Response resume_run(const Request&, const Params&);
  Response cancel_run(const Request&, const Params&);
  Response eligibility(const Request&, const Params&);
  Response report(const Request&, const Params&);
  Response audit(const Request&, const Params&);
  Response share(const Request&, const Params&);
  Response revoke_share(const Request&, const Params&);
  Response view_share(const Request&, const Params&);
  Response put_quotas(const Request&, const Params&);
  Response schedule_state(const Request&, const Params&);

  store::Store& store_;
  const Clock& clock_;
  platform::AdapterRegistry& adapters_;
  ApiOptions options_;
  workers::WorkerManager workers_;
  engine::Engine engine_;
  std::vector<Route> routes_;
  std::mutex mu_;  // guards controllers_ and run loading
  std::map<std::string, std::unique_ptr<orchestrator::RunController>> controllers_;
};

// Maps an error code to its HTTP status.
int status_for(std::string_view code);

}  // namespace crowdctl::service
