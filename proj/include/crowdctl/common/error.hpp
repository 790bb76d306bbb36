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

#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdctl {

// Machine-readable error codes shared by the CLI (stderr lines) and the HTTP
// API (4xx bodies).
namespace errc {
inline constexpr std::string_view invalid_argument = "invalid-argument";
inline constexpr std::string_view parse_error = "parse-error";
inline constexpr std::string_view validation_failed = "validation-failed";
inline constexpr std::string_view not_found = "not-found";
inline constexpr std::string_view conflict = "conflict";
inline constexpr std::string_view forbidden = "forbidden";
inline constexpr std::string_view unauthorized = "unauthorized";
inline constexpr std::string_view storage = "storage";
inline constexpr std::string_view unsupported_element = "unsupported-element";
inline constexpr std::string_view degenerate_reference = "degenerate-reference";
inline constexpr std::string_view protocol_violation = "protocol-violation";
inline constexpr std::string_view definition_unavailable = "definition-unavailable";
inline constexpr std::string_view no_factors = "no-factors";
inline constexpr std::string_view cycle = "cycle";
inline constexpr std::string_view adapter_failure = "adapter-failure";
inline constexpr std::string_view invalid_state = "invalid-state";
}  // namespace errc

class Error : public std::runtime_error {
 public:
  Error(std::string_view code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Raised for storage-layer failures that a caller may retry. Kept distinct
// from semantic outcomes such as already-exists or conflict, which are
// returned as values.
class StorageError : public Error {
 public:
  explicit StorageError(const std::string& message)
      : Error(errc::storage, message) {}
};

}  // namespace crowdctl
