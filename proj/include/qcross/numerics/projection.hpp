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

#include <span>

#include "qcross/numerics/matrix.hpp"

namespace qcross {

/// { d : ||d||_1 <= gross_cap, |d_j| <= name_cap }. Always contains zero.
struct FeasibleSet {
  double gross_cap = 0.0;
  double name_cap = 0.0;

  bool contains(std::span<const double> d, double tol = 1e-9) const;
  FeasibleSet scaled(double factor) const { return {gross_cap * factor, name_cap * factor}; }
};

/// Euclidean projection onto the feasible set: clip to the box, and when the
/// gross cap still binds, soft-threshold by the unique t > 0 with
/// sum_j min(C, max(|x_j| - t, 0)) = G.
Vector project_l1_box(std::span<const double> x, const FeasibleSet& set);

}  // namespace qcross
