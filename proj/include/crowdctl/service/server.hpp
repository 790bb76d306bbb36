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

#include <atomic>
#include <chrono>
#include <string>

#include "crowdctl/service/api.hpp"

namespace crowdctl::service {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store_path = "crowdctl.db";
  std::string file_root = "crowdctl-tasks";  // FileAdapter root
  std::string log_level = "info";
  ApiOptions api;
  std::chrono::milliseconds tick_interval{1000};
};

// Overrides fields from CROWDCTL_PORT, CROWDCTL_STORE, CROWDCTL_LOG_LEVEL,
// CROWDCTL_API_KEY, CROWDCTL_FILE_ROOT and CROWDCTL_PUBLIC_URL when set.
void apply_environment(ServerConfig& cfg);

// Serves the API over HTTP and ticks live runs in the background until
// `stop` becomes true. Returns a process exit code.
int serve(const ServerConfig& cfg, const std::atomic<bool>& stop);

}  // namespace crowdctl::service
