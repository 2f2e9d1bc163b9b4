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

#include "qcross/numerics/nnls.hpp"

#include <algorithm>
#include <cmath>

#include "qcross/numerics/eig.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"

namespace qcross {

double nnls_objective(const Matrix& design, std::span<const double> target, double ridge,
                      std::span<const double> x) {
  const Vector r = sub(matvec(design, x), target);
  return dot(r, r) + ridge * dot(x, x);
}

namespace {

// Exact solve on the face picked by the first-order iterate: sign-constrained
// coordinates at zero stay fixed, the rest solve the reduced normal equations
// by pseudo-inverse. Kept only when feasible and no worse.
void polish(const Matrix& ns, const Vector& cs, const std::vector<bool>& nonneg, Vector& y) {
  const std::size_t n = y.size();
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < n; ++i)
    if (!(nonneg[i] && y[i] <= 0.0)) free.push_back(i);
  if (free.empty()) return;
  Matrix sub_n(free.size(), free.size());
  for (std::size_t a = 0; a < free.size(); ++a)
    for (std::size_t b = 0; b < free.size(); ++b) sub_n(a, b) = ns(free[a], free[b]);
  const EigenDecomposition e = sym_eig(symmetrized(sub_n));
  const double cutoff = 1e-13 * std::max(e.values.front(), 0.0);
  Vector z(free.size(), 0.0);
  for (std::size_t c = 0; c < free.size(); ++c) {
    if (!(e.values[c] > cutoff)) continue;
    double proj = 0.0;
    for (std::size_t a = 0; a < free.size(); ++a) proj += e.vectors(a, c) * cs[free[a]];
    proj /= e.values[c];
    for (std::size_t a = 0; a < free.size(); ++a) z[a] += proj * e.vectors(a, c);
  }
  Vector cand(n, 0.0);
  for (std::size_t a = 0; a < free.size(); ++a) {
    if (nonneg[free[a]] && z[a] < 0.0) return;
    cand[free[a]] = z[a];
  }
  auto phi = [&](const Vector& v) { return 0.5 * quad_form(ns, v) - dot(cs, v); };
  if (phi(cand) <= phi(y)) y = std::move(cand);
}

}  // namespace

Vector nnls_ridge(const Matrix& design, std::span<const double> target,
                  const std::vector<bool>& nonneg, double ridge, const NnlsOptions& opts) {
  if (design.rows() != target.size()) throw ContractViolation("nnls_ridge: design rows != target length");
  if (nonneg.size() != design.cols()) throw ContractViolation("nnls_ridge: mask length != columns");
  if (ridge < 0.0) throw ContractViolation("nnls_ridge: ridge must be nonnegative");
  const std::size_t n = design.cols();
  if (n == 0) return {};

  Matrix normal = matmul_tn(design, design);
  for (std::size_t i = 0; i < n; ++i) normal(i, i) += ridge;
  const Vector rhs = matvec_t(design, target);

  // Jacobi scaling x = S y keeps the sign constraints separable.
  Vector s(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    if (normal(i, i) > 0.0) s[i] = 1.0 / std::sqrt(normal(i, i));
  Matrix ns = normal;
  Vector cs(n);
  for (std::size_t i = 0; i < n; ++i) {
    cs[i] = s[i] * rhs[i];
    for (std::size_t j = 0; j < n; ++j) ns(i, j) *= s[i] * s[j];
  }
  const double lip = std::max(max_eigenvalue(ns), 1e-300);
  const double step = 1.0 / lip;
  const double tol = opts.gradient_tol * (1.0 + norm_inf(rhs));

  auto project = [&](Vector& y) {
    for (std::size_t i = 0; i < n; ++i)
      if (nonneg[i] && y[i] < 0.0) y[i] = 0.0;
  };
  auto phi = [&](const Vector& y) { return 0.5 * quad_form(ns, y) - dot(cs, y); };

  // Stationarity in the original coordinates: the projected gradient of
  // x^T N x / 2 - c^T x.
  auto projected_gradient_norm = [&](const Vector& y) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = s[i] * y[i];
      double g = 0.0;
      for (std::size_t j = 0; j < n; ++j) g += normal(i, j) * s[j] * y[j];
      g -= rhs[i];
      if (nonneg[i] && xi <= 0.0) g = std::min(g, 0.0);
      worst = std::max(worst, std::abs(g));
    }
    return worst;
  };

  Vector x(n, 0.0);
  Vector y = x;
  double fx = phi(x);
  double t = 1.0;
  Vector grad(n);
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = dot(ns.row(i), y) - cs[i];
    Vector x_new(n);
    for (std::size_t i = 0; i < n; ++i) x_new[i] = y[i] - step * grad[i];
    project(x_new);
    const double f_new = phi(x_new);

    double restart_test = 0.0;
    for (std::size_t i = 0; i < n; ++i) restart_test += (y[i] - x_new[i]) * (x_new[i] - x[i]);
    if (restart_test > 0.0 || f_new > fx) {
      t = 1.0;
      y = x_new;
    } else {
      const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_new;
      for (std::size_t i = 0; i < n; ++i) y[i] = x_new[i] + beta * (x_new[i] - x[i]);
      t = t_new;
    }
    x = std::move(x_new);
    fx = f_new;
    if (it % 8 == 7 && projected_gradient_norm(x) < tol) break;
  }

  polish(ns, cs, nonneg, x);
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = s[i] * x[i];
  if (projected_gradient_norm(x) >= tol)
    throw ConvergenceError("nnls_ridge: iteration cap reached", out, projected_gradient_norm(x));
  return out;
}

}  // namespace qcross
