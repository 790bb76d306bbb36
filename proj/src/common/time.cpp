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

#include "crowdctl/common/time.hpp"

#include <cstdio>

#include "crowdctl/common/error.hpp"

namespace crowdctl {

using namespace std::chrono;

std::string format_utc(Timestamp t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const auto in_day = t - day;
  const auto h = duration_cast<hours>(in_day);
  const auto m = duration_cast<minutes>(in_day - h);
  const auto s = duration_cast<seconds>(in_day - h - m);
  const auto ms = duration_cast<milliseconds>(in_day - h - m - s);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(h.count()),
                static_cast<int>(m.count()), static_cast<int>(s.count()),
                static_cast<int>(ms.count()));
  return buf;
}

Timestamp parse_utc(std::string_view text) {
  int y = 0;
  unsigned mo = 0, d = 0;
  int h = 0, mi = 0, s = 0, ms = 0;
  const std::string buf(text);
  int consumed = 0;
  const int n = std::sscanf(buf.c_str(), "%4d-%2u-%2uT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi,
                            &s, &consumed);
  if (n < 6) throw Error(errc::parse_error, "bad timestamp: " + buf);
  std::string_view rest = std::string_view(buf).substr(static_cast<size_t>(consumed));
  if (!rest.empty() && rest.front() == '.') {
    rest.remove_prefix(1);
    int digits = 0;
    while (!rest.empty() && rest.front() >= '0' && rest.front() <= '9') {
      if (digits < 3) ms = ms * 10 + (rest.front() - '0');
      ++digits;
      rest.remove_prefix(1);
    }
    for (; digits < 3; ++digits) ms *= 10;
  }
  if (rest != "Z" && !rest.empty()) throw Error(errc::parse_error, "timestamp must be UTC: " + buf);
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) throw Error(errc::parse_error, "bad date: " + buf);
  return time_point_cast<Millis>(sys_days{ymd}) + hours{h} + minutes{mi} + seconds{s} +
         milliseconds{ms};
}

std::int64_t seconds_of_day(Timestamp t) {
  return duration_cast<seconds>(t - floor<days>(t)).count();
}

unsigned weekday_index(Timestamp t) { return weekday{floor<days>(t)}.c_encoding(); }

}  // namespace crowdctl
