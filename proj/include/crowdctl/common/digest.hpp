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

#include <cstddef>
#include <string>
#include <string_view>

namespace crowdctl {

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

std::string hmac_sha256_hex(std::string_view key, std::string_view message);

// Cryptographically random token, hex encoded (2 * bytes characters).
std::string random_token_hex(std::size_t bytes = 16);

bool constant_time_equal(std::string_view a, std::string_view b);

}  // namespace crowdctl
