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
#include <span>
#include <vector>

#include "qcross/numerics/matrix.hpp"

namespace qcross {

struct NnlsOptions {
  double gradient_tol = 1e-8;  ///< relative to 1 + ||design^T target||_inf
  std::size_t max_iter = 200000;
};

/// argmin ||design x - target||^2 + ridge ||x||^2 with x_i >= 0 wherever
/// nonneg[i] is set. Accelerated projected gradient on the (Jacobi-scaled)
/// normal equations until the projected gradient is below tolerance.
Vector nnls_ridge(const Matrix& design, std::span<const double> target,
                  const std::vector<bool>& nonneg, double ridge, const NnlsOptions& opts = {});

/// ||design x - target||^2 + ridge ||x||^2
double nnls_objective(const Matrix& design, std::span<const double> target, double ridge,
                      std::span<const double> x);

}  // namespace qcross
