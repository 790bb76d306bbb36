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

#include "crowdctl/analysis/robust.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowdctl/common/error.hpp"

namespace crowdctl::analysis {
namespace {

void require_values(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw Error(errc::invalid_argument, std::string(what) + " of an empty sample");
}

void require_reference(const std::vector<double>& ref) {
  if (ref.size() < kMinReference) {
    throw Error(errc::invalid_argument, "reference needs at least " +
                                            std::to_string(kMinReference) + " values, got " +
                                            std::to_string(ref.size()));
  }
}

std::vector<double> standardize(const std::vector<double>& values, double center, double spread) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double x : values) out.push_back((x - center) / spread);
  return out;
}

}  // namespace

double median(std::vector<double> values) {
  require_values(values, "median");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double hi = *mid;
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), mid);
  return lo + (hi - lo) / 2.0;
}

double quantile(std::vector<double> values, double q) {
  require_values(values, "quantile");
  if (q < 0.0 || q > 1.0) throw Error(errc::invalid_argument, "quantile outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double iqr(const std::vector<double>& values) {
  return quantile(values, 0.75) - quantile(values, 0.25);
}

double mad(const std::vector<double>& values) {
  const double m = median(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double x : values) dev.push_back(std::fabs(x - m));
  return median(std::move(dev));
}

std::vector<double> robust_z(const std::vector<double>& values, const std::vector<double>& reference,
                             double scale) {
  require_reference(reference);
  if (!(scale > 0.0)) throw Error(errc::invalid_argument, "MAD scale must be positive");
  const double spread = scale * mad(reference);
  if (spread == 0.0) throw Error(errc::degenerate_reference, "reference MAD is zero");
  return standardize(values, median(reference), spread);
}

std::vector<double> iqr_z(const std::vector<double>& values, const std::vector<double>& reference) {
  require_reference(reference);
  const double spread = iqr(reference) / kIqrScale;
  if (spread == 0.0) throw Error(errc::degenerate_reference, "reference IQR is zero");
  return standardize(values, median(reference), spread);
}

}  // namespace crowdctl::analysis
