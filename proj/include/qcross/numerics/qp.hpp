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
#include <optional>
#include <span>

#include "qcross/numerics/matrix.hpp"
#include "qcross/numerics/projection.hpp"

namespace qcross {

struct QpOptions {
  double tol = 1e-9;             ///< objective-improvement tolerance
  std::size_t max_iter = 0;      ///< 0 selects 50 * dimension
  double lipschitz = 0.0;        ///< > 0 skips the eigen solve (and the PSD check)
  std::optional<Vector> warm_start;
};

struct QpResult {
  Vector x;
  double objective = 0.0;        ///< value of the maximized concave objective
  std::size_t iterations = 0;
  double residual = 0.0;         ///< gradient-mapping sup-norm at exit
};

/// argmax_{d in set} theta^T d - d^T H d / 2 - price^T d.
///
/// Projected gradient with Nesterov momentum (step 1/L, L = lambda_max(H))
/// and gradient-based restart. Stops once the objective improvement falls
/// below tol and the gradient mapping is small. Throws ContractViolation for
/// a non-PSD H and ConvergenceError at the iteration cap.
QpResult solve_concave_qp(std::span<const double> theta, const Matrix& h,
                          std::span<const double> price, const FeasibleSet& set,
                          const QpOptions& opts = {});

/// argmax_{lo <= c <= hi} lin^T c - c^T H c / 2, same method as above.
QpResult solve_box_qp(std::span<const double> lin, const Matrix& h, std::span<const double> lo,
                      std::span<const double> hi, const QpOptions& opts = {});

/// theta^T d - d^T H d / 2 - price^T d
double concave_objective(std::span<const double> theta, const Matrix& h,
                         std::span<const double> price, std::span<const double> d);

}  // namespace qcross
