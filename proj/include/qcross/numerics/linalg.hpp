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

double dot(std::span<const double> a, std::span<const double> b);
double norm1(std::span<const double> a);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

Vector add(std::span<const double> a, std::span<const double> b);
Vector sub(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);
bool all_finite(std::span<const double> a);

Vector matvec(const Matrix& a, std::span<const double> x);
/// A^T x without forming the transpose.
Vector matvec_t(const Matrix& a, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);
/// A^T B without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double s);
/// a*A + b*B, the common shape of curvature matrices.
Matrix combine(double a, const Matrix& A, double b, const Matrix& B);

/// x^T A x
double quad_form(const Matrix& a, std::span<const double> x);

double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius(const Matrix& a);

/// Symmetry within `rel_tol * max|A|`.
bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);
/// Throws ContractViolation unless A is square and symmetric.
void require_symmetric(const Matrix& a, const char* what);
Matrix symmetrized(const Matrix& a);

/// Lower Cholesky factor of an SPD matrix; throws ContractViolation when the
/// matrix is not numerically positive definite.
Matrix cholesky(const Matrix& a);
Vector cholesky_solve(const Matrix& lower, std::span<const double> b);
Matrix cholesky_solve(const Matrix& lower, const Matrix& b);
Matrix inverse_spd(const Matrix& a);
Vector solve_spd(const Matrix& a, std::span<const double> b);

}  // namespace qcross
