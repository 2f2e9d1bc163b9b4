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

#include "qcross/numerics/matrix.hpp"

namespace qcross {

struct EigenDecomposition {
  Vector values;   ///< descending
  Matrix vectors;  ///< column j pairs with values[j]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (order <= 500).
/// Throws ContractViolation on non-symmetric input.
EigenDecomposition sym_eig(const Matrix& a);

/// Q diag(values) Q^T
Matrix reconstruct(const EigenDecomposition& e);

double max_eigenvalue(const Matrix& a);
double min_eigenvalue(const Matrix& a);

/// Nearest symmetric matrix (Frobenius) whose eigenvalues are all >= floor.
/// Returns the input unchanged when it already satisfies the floor.
Matrix psd_project(const Matrix& a, double floor = 0.0);

}  // namespace qcross
