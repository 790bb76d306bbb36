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

#include <string>
#include <vector>

#include "crowdctl/common/error.hpp"

namespace crowdctl {

// A single rule broken by a configuration document. Validation returns these
// as data; callers decide whether to reject.
struct Violation {
  std::string code;
  std::string message;
  std::string subject;  // block/group/bucket id when one applies

  bool operator==(const Violation&) const = default;
};

using Violations = std::vector<Violation>;

// Rejection carrying every violation found, not just the first.
class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(Violations v)
      : Error(errc::validation_failed, summary(v)), violations_(std::move(v)) {}

  const Violations& violations() const noexcept { return violations_; }

 private:
  static std::string summary(const Violations& v) {
    std::string s = std::to_string(v.size()) + " violation(s)";
    if (!v.empty()) s += "; first: " + v.front().message;
    return s;
  }
  Violations violations_;
};

}  // namespace crowdctl
