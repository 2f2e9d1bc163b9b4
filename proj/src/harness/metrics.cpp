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

#include "qcross/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/format.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {

double adjusted_welfare(double eff, double c, double leakage) { return 100.0 * eff - 100.0 * c * leakage; }

double break_even(double eff_a, double eff_b, double l_a, double l_b) {
  if (!(l_b > l_a)) throw ContractViolation("break_even: needs l_b > l_a");
  return (eff_b - eff_a) / (l_b - l_a);
}

namespace {

struct Strata {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> members;
};

Strata group(const std::vector<double>& values, const std::vector<std::string>& strata, std::size_t reps,
             const char* what) {
  if (values.empty()) throw ContractViolation(std::string(what) + ": no values");
  if (values.size() != strata.size()) throw ContractViolation(std::string(what) + ": strata length");
  if (reps < 100) throw ContractViolation(std::string(what) + ": reps must be at least 100");
  for (double v : values)
    if (!std::isfinite(v)) throw ContractViolation(std::string(what) + ": non-finite value");
  std::map<std::string, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < values.size(); ++i) by[strata[i]].push_back(i);
  Strata s;
  for (auto& [label, idx] : by) {
    if (idx.empty()) throw ContractViolation(std::string(what) + ": empty stratum " + label);
    s.labels.push_back(label);
    s.members.push_back(std::move(idx));
  }
  return s;
}

// Replicate means of the values resampled within strata.
std::vector<double> replicate_means(const std::vector<double>& values, const Strata& s, std::size_t reps,
                                    std::uint64_t seed, bool parallel) {
  std::vector<double> means(reps);
  const double n = static_cast<double>(values.size());
  const auto one = [&](std::size_t r) {
    CounterRng rng(seed, {static_cast<std::uint64_t>(r)});
    double total = 0.0;
    for (const auto& idx : s.members)
      for (std::size_t t = 0; t < idx.size(); ++t) total += values[idx[rng.index(idx.size())]];
    means[r] = total / n;
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < reps; ++r) one(r);
  } else {
    for (std::size_t r = 0; r < reps; ++r) one(r);
  }
  return means;
}

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double half_width(std::vector<double> means) {
  std::sort(means.begin(), means.end());
  return 0.5 * (quantile(means, 0.975) - quantile(means, 0.025));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

BootstrapSummary stratified_bootstrap(const std::vector<double>& values, const std::vector<std::string>& strata,
                                      std::size_t reps, std::uint64_t seed, bool parallel) {
  const Strata s = group(values, strata, reps, "stratified_bootstrap");
  BootstrapSummary out;
  out.mean = mean_of(values);
  out.half_width = half_width(replicate_means(values, s, reps, seed, parallel));
  out.reps = reps;
  out.n = values.size();
  out.strata = s.labels;
  return out;
}

PairedTest paired_bootstrap_test(const std::vector<double>& diffs, const std::vector<std::string>& strata,
                                 std::size_t reps, std::uint64_t seed, bool parallel) {
  const Strata s = group(diffs, strata, reps, "paired_bootstrap_test");
  PairedTest t;
  t.reps = reps;
  t.mean_diff = mean_of(diffs);
  t.half_width = half_width(replicate_means(diffs, s, reps, seed, parallel));
  std::vector<double> centered(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) centered[i] = diffs[i] - t.mean_diff;
  const std::vector<double> null_means = replicate_means(centered, s, reps, seed ^ 0x5bd1e995ULL, parallel);
  std::size_t exceed = 0;
  for (double m : null_means)
    if (std::abs(m) >= std::abs(t.mean_diff)) ++exceed;
  t.below_resolution = exceed == 0;
  t.p_value = static_cast<double>(std::max<std::size_t>(exceed, 1)) / static_cast<double>(reps);
  t.p_holm = t.p_value;
  return t;
}

std::vector<double> holm_adjust(const std::vector<double>& pvals) {
  const std::size_t k = pvals.size();
  for (double p : pvals)
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("holm_adjust: p outside [0, 1]");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
  std::vector<double> out(k);
  double running = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    running = std::max(running, static_cast<double>(k - i) * pvals[order[i]]);
    out[order[i]] = std::min(1.0, running);
  }
  return out;
}

void holm_adjust(std::vector<PairedTest>& tests) {
  std::vector<double> p;
  for (const auto& t : tests) p.push_back(t.p_value);
  const std::vector<double> adj = holm_adjust(p);
  for (std::size_t i = 0; i < tests.size(); ++i) tests[i].p_holm = adj[i];
}

std::string format_p(const PairedTest& t) {
  // Holm is monotone in its inputs, so substituting 1/reps keeps a bound.
  return (t.below_resolution ? "<" : "") + fmt_sig(t.p_holm, 4);
}

}  // namespace qcross
