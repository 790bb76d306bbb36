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

#include "crowdctl/service/server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cctype>
#include <cstdlib>
#include <memory>
#include <thread>

#include "crowdctl/common/error.hpp"
#include "crowdctl/common/time.hpp"
#include "crowdctl/platform/file_adapter.hpp"
#include "crowdctl/store/store.hpp"

namespace crowdctl::service {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Request to_request(const httplib::Request& in) {
  Request out;
  out.method = in.method;
  out.path = in.path;
  // Repeated query parameters keep their first value.
  for (const auto& [k, v] : in.params) out.query.emplace(k, v);
  for (const auto& [k, v] : in.headers) out.headers.emplace(lower(k), v);
  out.body = in.body;
  return out;
}

}  // namespace

void apply_environment(ServerConfig& cfg) {
  auto env = [](const char* name) -> const char* { return std::getenv(name); };
  if (const char* v = env("CROWDCTL_PORT")) {
    try {
      cfg.port = std::stoi(v);
    } catch (const std::exception&) {
      throw Error(errc::invalid_argument, std::string("CROWDCTL_PORT is not a port: ") + v);
    }
  }
  if (const char* v = env("CROWDCTL_STORE")) cfg.store_path = v;
  if (const char* v = env("CROWDCTL_LOG_LEVEL")) cfg.log_level = v;
  if (const char* v = env("CROWDCTL_API_KEY")) cfg.api.api_key = v;
  if (const char* v = env("CROWDCTL_FILE_ROOT")) cfg.file_root = v;
  if (const char* v = env("CROWDCTL_PUBLIC_URL")) cfg.api.public_base_url = v;
}

int serve(const ServerConfig& cfg, const std::atomic<bool>& stop) {
  spdlog::set_level(spdlog::level::from_str(cfg.log_level));
  SystemClock clock;
  store::Store store(cfg.store_path);
  platform::AdapterRegistry adapters;
  adapters.add(std::make_shared<platform::FileAdapter>(cfg.file_root, clock));
  Api api(store, clock, adapters, cfg.api);

  httplib::Server http;
  auto dispatch = [&api](const httplib::Request& in, httplib::Response& out) {
    const auto started = std::chrono::steady_clock::now();
    const Response r = api.handle(to_request(in));
    out.status = r.status;
    out.set_content(r.body, r.content_type);
    const auto ms = std::chrono::duration_cast<std::chrono::microseconds>(
                        std::chrono::steady_clock::now() - started)
                        .count() /
                    1000.0;
    spdlog::info("{} {} -> {} ({:.1f} ms)", in.method, in.path, r.status, ms);
  };
  http.Get(".*", dispatch);
  http.Post(".*", dispatch);
  http.Put(".*", dispatch);
  http.Delete(".*", dispatch);

  if (!http.bind_to_port(cfg.host, cfg.port)) {
    spdlog::error("cannot bind {}:{}", cfg.host, cfg.port);
    return 1;
  }
  std::thread listener([&http] { http.listen_after_bind(); });
  spdlog::info("listening on {}:{} (store {})", cfg.host, cfg.port, cfg.store_path);

  auto next_tick = std::chrono::steady_clock::now();
  while (!stop.load()) {
    if (std::chrono::steady_clock::now() >= next_tick) {
      try {
        api.tick();
      } catch (const std::exception& e) {
        spdlog::error("tick failed: {}", e.what());
      }
      next_tick += cfg.tick_interval;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  http.stop();
  listener.join();
  spdlog::info("stopped");
  return 0;
}

}  // namespace crowdctl::service
