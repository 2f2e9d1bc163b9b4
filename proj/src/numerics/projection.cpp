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

#include "qcross/numerics/projection.hpp"

#include <algorithm>
#include <cmath>

#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"

namespace qcross {

bool FeasibleSet::contains(std::span<const double> d, double tol) const {
  return norm1(d) <= gross_cap + tol && norm_inf(d) <= name_cap + tol;
}

namespace {

// Mass left after shrinking |y| by t and clipping at c.
double shrunk_mass(std::span<const double> mag, double c, double t) {
  double s = 0.0;
  for (double a : mag) s += std::clamp(a - t, 0.0, c);
  return s;
}

}  // namespace

Vector project_l1_box(std::span<const double> x, const FeasibleSet& set) {
  if (set.gross_cap < 0.0 || set.name_cap < 0.0)
    throw ContractViolation("project_l1_box: caps must be nonnegative");
  const std::size_t m = x.size();
  const double c = set.name_cap;
  const double g = set.gross_cap;

  Vector mag(m);
  for (std::size_t j = 0; j < m; ++j) mag[j] = std::abs(x[j]);

  Vector out(m, 0.0);
  if (c == 0.0 || g == 0.0) return out;

  if (shrunk_mass(mag, c, 0.0) <= g) {
    for (std::size_t j = 0; j < m; ++j) out[j] = std::clamp(x[j], -c, c);
    return out;
  }

  // The mass is piecewise linear and nonincreasing in t with kinks at |y_j|
  // and |y_j| - c. Bisect over the sorted kinks, then solve the linear piece.
  Vector knots;
  knots.reserve(2 * m + 1);
  knots.push_back(0.0);
  for (double a : mag) {
    knots.push_back(a);
    if (a > c) knots.push_back(a - c);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  // Invariant: mass(knots[lo]) > g >= mass(knots[hi]).
  std::size_t lo = 0;
  std::size_t hi = knots.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (shrunk_mass(mag, c, knots[mid]) > g)
      lo = mid;
    else
      hi = mid;
  }

  // On (knots[lo], knots[hi]) every coordinate is zero, capped or free.
  const double probe = 0.5 * (knots[lo] + knots[hi]);
  double capped_mass = 0.0;
  double free_sum = 0.0;
  std::size_t n_free = 0;
  for (double a : mag) {
    const double r = a - probe;
    if (r >= c) {
      capped_mass += c;
    } else if (r > 0.0) {
      free_sum += a;
      ++n_free;
    }
  }
  double t = knots[hi];
  if (n_free > 0) t = (free_sum + capped_mass - g) / static_cast<double>(n_free);
  t = std::clamp(t, knots[lo], knots[hi]);

  for (std::size_t j = 0; j < m; ++j) {
    const double v = std::clamp(mag[j] - t, 0.0, c);
    out[j] = x[j] < 0.0 ? -v : v;
  }

  // Rounding can leave the L1 norm a few ulps above the cap.
  const double l1 = norm1(out);
  if (l1 > g) {
    const double s = g / l1;
    for (double& v : out) v *= s;
  }
  return out;
}

}  // namespace qcross
