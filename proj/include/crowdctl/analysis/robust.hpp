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
#include <vector>

namespace crowdctl::analysis {

// Scales the MAD to the standard deviation of a normal distribution.
inline constexpr double kMadScale = 1.4826;
// IQR of a standard normal distribution.
inline constexpr double kIqrScale = 1.3489795003921634;
inline constexpr std::size_t kMinReference = 5;

// Median of a non-empty sample; even sizes average the middle pair.
double median(std::vector<double> values);
// Linear-interpolation quantile (type 7) of a non-empty sample.
double quantile(std::vector<double> values, double q);
double iqr(const std::vector<double>& values);
// Median absolute deviation around the median, unscaled.
double mad(const std::vector<double>& values);

// z_i = (x_i - median(ref)) / (scale * MAD(ref)). Throws invalid-argument
// when the reference holds fewer than kMinReference values and
// degenerate-reference when its MAD is zero.
std::vector<double> robust_z(const std::vector<double>& values, const std::vector<double>& reference,
                             double scale = kMadScale);

// Fallback: z_i = (x_i - median(ref)) / (IQR(ref) / kIqrScale). Same
// errors as robust_z, degenerate-reference when the IQR is zero.
std::vector<double> iqr_z(const std::vector<double>& values, const std::vector<double>& reference);

}  // namespace crowdctl::analysis
