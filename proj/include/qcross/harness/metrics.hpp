// Copyright 2026 The qcross Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace qcross {

/// 100 eff - 100 c L
double adjusted_welfare(double eff, double c, double leakage);

/// c* = (eff_b - eff_a) / (l_b - l_a); throws ContractViolation when
/// l_b <= l_a.
double break_even(double eff_a, double eff_b, double l_a, double l_b);

struct BootstrapSummary {
  double mean = 0.0;
  double half_width = 0.0;  ///< half the 2.5-97.5 percentile spread
  std::size_t reps = 0;
  std::size_t n = 0;
  std::vector<std::string> strata;  ///< distinct labels, sorted
};

/// Resamples cells with replacement inside each stratum. Replicate r draws
/// from CounterRng(seed, {r}), so the parallel and serial paths agree.
BootstrapSummary stratified_bootstrap(const std::vector<double>& values, const std::vector<std::string>& strata,
                                      std::size_t reps, std::uint64_t seed, bool parallel = true);

struct PairedTest {
  double mean_diff = 0.0;
  double half_width = 0.0;
  double p_value = 1.0;        ///< exceedance fraction, or 1/reps when none exceed
  bool below_resolution = false;  ///< no centered draw reached |T_obs|: "p < 1/reps"
  double p_holm = 1.0;
  std::size_t reps = 0;
};

/// Centered stratified bootstrap test of mean(diffs) = 0.
PairedTest paired_bootstrap_test(const std::vector<double>& diffs, const std::vector<std::string>& strata,
                                 std::size_t reps, std::uint64_t seed, bool parallel = true);

/// Holm step-down adjustment, returned in the input order.
std::vector<double> holm_adjust(const std::vector<double>& pvals);

/// Fills p_holm across a family of tests.
void holm_adjust(std::vector<PairedTest>& tests);

/// Holm-adjusted p as text, prefixed by "<" when the raw p is below resolution.
std::string format_p(const PairedTest& t);

}  // namespace qcross
