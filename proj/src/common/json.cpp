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

#include "crowdctl/common/json.hpp"

#include <fstream>
#include <sstream>

namespace crowdctl {

const Json ObjectReader::kNull = nullptr;

ObjectReader::ObjectReader(const Json& object, std::string path)
    : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) throw Error(errc::parse_error, "expected object at " + path_);
}

const Json& ObjectReader::field(std::string_view key, bool required) {
  seen_.emplace(key);
  auto it = object_.find(std::string(key));
  if (it == object_.end()) {
    if (required) throw Error(errc::parse_error, "missing field " + path_of(key));
    return kNull;
  }
  return *it;
}

const Json* ObjectReader::optional_json(std::string_view key) {
  const Json& v = field(key, false);
  return v.is_null() ? nullptr : &v;
}

void ObjectReader::finish() const {
  for (auto it = object_.begin(); it != object_.end(); ++it) {
    if (!seen_.contains(it.key())) {
      throw Error(errc::parse_error, "unknown field " + path_ + "." + it.key());
    }
  }
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(errc::parse_error, std::string(what) + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::not_found, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(errc::storage, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(errc::storage, "short write to " + path);
}

}  // namespace crowdctl
