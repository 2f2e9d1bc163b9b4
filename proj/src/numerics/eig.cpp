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

#include "qcross/numerics/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"

namespace qcross {

namespace {

constexpr std::size_t kMaxOrder = 500;
constexpr int kMaxSweeps = 100;

}  // namespace

EigenDecomposition sym_eig(const Matrix& input) {
  require_symmetric(input, "sym_eig");
  const std::size_t n = input.rows();
  if (n > kMaxOrder) throw ContractViolation("sym_eig: order exceeds 500");

  Matrix a = symmetrized(input);
  Matrix v = Matrix::identity(n);

  const double scale = std::max(max_abs(a), 1e-300);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Skip rotations that cannot change the diagonal at double precision.
        if (sweep > 3 && std::abs(apq) < 1e-18 * (std::abs(app) + std::abs(aqq))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition e{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    e.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) e.vectors(k, j) = v(k, order[j]);
  }
  return e;
}

Matrix reconstruct(const EigenDecomposition& e) {
  const std::size_t n = e.values.size();
  Matrix r(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lam = e.values[j];
    if (lam == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = lam * e.vectors(i, j);
      for (std::size_t k = 0; k < n; ++k) r(i, k) += vi * e.vectors(k, j);
    }
  }
  return symmetrized(r);
}

double max_eigenvalue(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  return sym_eig(a).values.front();
}

double min_eigenvalue(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  return sym_eig(a).values.back();
}

Matrix psd_project(const Matrix& a, double floor) {
  if (floor < 0.0) throw ContractViolation("psd_project: floor must be nonnegative");
  EigenDecomposition e = sym_eig(a);
  if (e.values.empty() || e.values.back() >= floor) return a;
  for (double& lam : e.values) lam = std::max(lam, floor);
  return reconstruct(e);
}

}  // namespace qcross
