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

#include "qcross/numerics/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_map>

#include "qcross/numerics/eig.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {

double concave_objective(std::span<const double> theta, const Matrix& h,
                         std::span<const double> price, std::span<const double> d) {
  double lin = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) lin += (theta[j] - price[j]) * d[j];
  return lin - 0.5 * quad_form(h, d);
}

namespace {

std::uint64_t content_hash(const Matrix& h) {
  std::uint64_t k = h.rows();
  for (double v : h.data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    k = mix64(k ^ bits);
  }
  return k;
}

// Lipschitz constant of the gradient; validates PSD on the way. Results are
// memoized per thread by matrix content, since the same curvature matrix is
// solved against many prices.
double curvature_bound(const Matrix& h, const char* what) {
  if (h.rows() == 0) return 0.0;
  thread_local std::unordered_multimap<std::uint64_t, std::pair<Matrix, double>> memo;
  const std::uint64_t key = content_hash(h);
  auto [lo, hi] = memo.equal_range(key);
  for (auto it = lo; it != hi; ++it)
    if (it->second.first == h) return it->second.second;
  require_symmetric(h, what);
  const EigenDecomposition e = sym_eig(h);
  const double top = e.values.front();
  if (e.values.back() < -1e-10 * std::max(1.0, std::abs(top)))
    throw ContractViolation(std::string(what) + ": curvature matrix is not PSD");
  if (memo.size() >= 4096) memo.clear();
  memo.emplace(key, std::make_pair(h, std::max(top, 0.0)));
  return std::max(top, 0.0);
}

// Minimizes phi(x) = x^T H x / 2 - b^T x over a set given by `project`.
template <class Project>
QpResult accelerated_projected_gradient(const Matrix& h, const Vector& b, Project&& project,
                                        double lipschitz, const QpOptions& opts,
                                        const char* what) {
  const std::size_t n = b.size();
  const std::size_t cap = opts.max_iter > 0 ? opts.max_iter : std::max<std::size_t>(50 * n, 50);
  // A zero curvature matrix leaves a linear program over the set; any large
  // step lands on the maximizing vertex after one projection.
  const double lip = std::max(lipschitz, 1e-12);
  const double step = 1.0 / lip;
  const double gm_tol = std::max(std::sqrt(opts.tol) * 1e-2, 1e-13);

  auto phi = [&](const Vector& x) { return 0.5 * quad_form(h, x) - dot(b, x); };

  Vector x = opts.warm_start && opts.warm_start->size() == n ? project(*opts.warm_start)
                                                             : project(Vector(n, 0.0));
  double fx = phi(x);
  Vector y = x;
  Vector x_best = x;
  double f_best = fx;
  double t = 1.0;
  double residual = 0.0;

  Vector grad(n);
  Vector trial(n);
  for (std::size_t it = 1; it <= cap; ++it) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = dot(h.row(i), y) - b[i];
    for (std::size_t i = 0; i < n; ++i) trial[i] = y[i] - step * grad[i];
    Vector x_new = project(trial);
    const double f_new = phi(x_new);

    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(y[i] - x_new[i]));
    residual *= lip;

    if (f_new < f_best) {
      f_best = f_new;
      x_best = x_new;
    }

    const double improvement = fx - f_new;
    const bool small_step = residual <= gm_tol * (1.0 + norm_inf(b));
    if (std::abs(improvement) <= opts.tol * (1.0 + std::abs(f_new)) && small_step) {
      return {x_best, -f_best, it, residual};
    }

    // Gradient restart: drop momentum when it points uphill.
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
  }
  throw ConvergenceError(std::string(what) + ": iteration cap reached", x_best, residual);
}

}  // namespace

QpResult solve_concave_qp(std::span<const double> theta, const Matrix& h,
                          std::span<const double> price, const FeasibleSet& set,
                          const QpOptions& opts) {
  const std::size_t m = theta.size();
  if (h.rows() != m || h.cols() != m || price.size() != m)
    throw ContractViolation("solve_concave_qp: dimension mismatch");
  if (!(opts.tol > 0.0)) throw ContractViolation("solve_concave_qp: tol must be positive");
  const double lip = opts.lipschitz > 0.0 ? opts.lipschitz : curvature_bound(h, "solve_concave_qp");
  Vector b(m);
  for (std::size_t j = 0; j < m; ++j) b[j] = theta[j] - price[j];
  return accelerated_projected_gradient(
      h, b, [&](const Vector& v) { return project_l1_box(v, set); }, lip, opts,
      "solve_concave_qp");
}

QpResult solve_box_qp(std::span<const double> lin, const Matrix& h, std::span<const double> lo,
                      std::span<const double> hi, const QpOptions& opts) {
  const std::size_t n = lin.size();
  if (h.rows() != n || h.cols() != n || lo.size() != n || hi.size() != n)
    throw ContractViolation("solve_box_qp: dimension mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (lo[i] > hi[i]) throw ContractViolation("solve_box_qp: empty box");
  const double lip = opts.lipschitz > 0.0 ? opts.lipschitz : curvature_bound(h, "solve_box_qp");
  Vector b(lin.begin(), lin.end());
  return accelerated_projected_gradient(
      h, b,
      [&](const Vector& v) {
        Vector c(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) c[i] = std::clamp(v[i], lo[i], hi[i]);
        return c;
      },
      lip, opts, "solve_box_qp");
}

}  // namespace qcross
