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

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "crowdctl/common/error.hpp"

namespace crowdctl {

using Json = nlohmann::json;

// Reads a JSON object field by field and rejects keys nobody asked for.
// Config typos should fail loudly, so every codec in the project goes
// through this.
class ObjectReader {
 public:
  ObjectReader(const Json& object, std::string path);

  template <typename T>
  T required(std::string_view key) {
    const Json& v = field(key, true);
    return convert<T>(v, key);
  }

  template <typename T>
  std::optional<T> optional(std::string_view key) {
    const Json& v = field(key, false);
    if (v.is_null()) return std::nullopt;
    return convert<T>(v, key);
  }

  template <typename T>
  T value_or(std::string_view key, T fallback) {
    auto v = optional<T>(key);
    return v ? *v : fallback;
  }

  const Json& required_json(std::string_view key) { return field(key, true); }
  const Json* optional_json(std::string_view key);

  std::string path_of(std::string_view key) const { return path_ + "." + std::string(key); }
  const std::string& path() const { return path_; }

  // Throws parse-error naming the first unknown key.
  void finish() const;

 private:
  const Json& field(std::string_view key, bool required);

  template <typename T>
  T convert(const Json& v, std::string_view key) const {
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(errc::parse_error, "wrong type at " + path_of(key));
    }
  }

  const Json& object_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
  static const Json kNull;
};

// Parses text into JSON, mapping library exceptions onto parse-error.
Json parse_json(std::string_view text, std::string_view what);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace crowdctl
