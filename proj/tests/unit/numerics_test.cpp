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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcross/numerics/eig.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/nnls.hpp"
#include "qcross/numerics/projection.hpp"
#include "qcross/numerics/qp.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {
namespace {

Matrix random_symmetric(CounterRng& rng, std::size_t n) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.normal();
  return a;
}

Matrix random_psd(CounterRng& rng, std::size_t n, double ridge) {
  Matrix b(n, n);
  for (auto& x : b.data()) x = rng.normal();
  Matrix h = matmul_tn(b, b);
  for (std::size_t i = 0; i < n; ++i) h(i, i) += ridge;
  return symmetrized(h);
}

Vector random_vector(CounterRng& rng, std::size_t n, double scale = 1.0) {
  Vector v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

double dist2(std::span<const double> a, std::span<const double> b) {
  const Vector d = sub(a, b);
  return dot(d, d);
}

// Independent projection oracle: bisection on the soft threshold t of
// clip(soft(x, t), C), 200 halvings.
Vector projection_bisection_oracle(std::span<const double> x, const FeasibleSet& s) {
  auto at = [&](double t) {
    Vector y(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double mag = std::min(std::max(std::abs(x[j]) - t, 0.0), s.name_cap);
      y[j] = x[j] < 0.0 ? -mag : mag;
    }
    return y;
  };
  Vector y0 = at(0.0);
  if (norm1(y0) <= s.gross_cap) return y0;
  double lo = 0.0, hi = norm_inf(x);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (norm1(at(mid)) > s.gross_cap ? lo : hi) = mid;
  }
  return at(hi);
}

// Lattice pattern search maximizing `score` over the feasible set, moves
// +-h e_i and +-h e_i +-h e_j at h = 0.1, 0.01, 0.001.
template <class Score>
Vector lattice_search(std::size_t n, const FeasibleSet& s, Score score) {
  Vector best(n, 0.0);
  double best_score = score(best);
  for (double h : {0.1, 0.01, 0.001}) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          for (int si : {-1, 1}) {
            for (int sj : {-1, 0, 1}) {
              if (j == i && sj != 0) continue;
              if (j != i && sj == 0) continue;
              Vector c = best;
              c[i] += si * h;
              if (j != i) c[j] += sj * h;
              if (!s.contains(c, 1e-12)) continue;
              const double sc = score(c);
              if (sc > best_score + 1e-15) {
                best = c;
                best_score = sc;
                improved = true;
              }
            }
          }
        }
      }
    }
  }
  return best;
}

Vector random_feasible(CounterRng& rng, std::size_t n, const FeasibleSet& s) {
  Vector z = project_l1_box(random_vector(rng, n, s.gross_cap), s);
  const double u = rng.uniform();
  for (auto& x : z) x *= u;
  return z;
}

TEST(SymEig, IdentityHasUnitSpectrum) {
  const auto e = sym_eig(Matrix::identity(3));
  for (double v : e.values) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(SymEig, DiagonalIsAxisAligned) {
  const auto e = sym_eig(Matrix::from_rows({{1.0, 0.0}, {0.0, 3.0}}));
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1.0, 1e-14);
}

TEST(SymEig, RandomReconstructionAndOrthonormality) {
  CounterRng rng(11, {1});
  for (std::size_t n : {2u, 5u, 10u, 40u}) {
    const Matrix a = random_symmetric(rng, n);
    const auto e = sym_eig(a);
    EXPECT_LE(max_abs_diff(reconstruct(e), a), 1e-8 * max_abs(a));
    EXPECT_LE(max_abs_diff(matmul_tn(e.vectors, e.vectors), Matrix::identity(n)), 1e-8);
    EXPECT_TRUE(std::is_sorted(e.values.rbegin(), e.values.rend()));
  }
}

TEST(SymEig, TwoByTwoClosedForm) {
  const double a = 2.0, b = 0.7, c = -1.0;
  const auto e = sym_eig(Matrix::from_rows({{a, b}, {b, c}}));
  const double mid = 0.5 * (a + c);
  const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  EXPECT_NEAR(e.values[0], mid + rad, 1e-13);
  EXPECT_NEAR(e.values[1], mid - rad, 1e-13);
}

TEST(SymEig, RejectsNonSymmetric) {
  EXPECT_THROW(sym_eig(Matrix::from_rows({{1.0, 2.0}, {0.0, 1.0}})), ContractViolation);
}

TEST(PsdProject, PsdInputUnchanged) {
  CounterRng rng(12, {});
  const Matrix h = random_psd(rng, 6, 0.1);
  EXPECT_EQ(psd_project(h, 0.0), h);
}

TEST(PsdProject, ClipsNegativeEigenvalue) {
  const Matrix p = psd_project(Matrix::from_rows({{1.0, 0.0}, {0.0, -1.0}}), 0.0);
  EXPECT_LE(max_abs_diff(p, Matrix::from_rows({{1.0, 0.0}, {0.0, 0.0}})), 1e-14);
}

TEST(PsdProject, RandomIndefiniteBecomesPsdAndNearest) {
  CounterRng rng(13, {});
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix a = random_symmetric(rng, 8);
    for (double floor : {0.0, 0.25}) {
      const Matrix p = psd_project(a, floor);
      EXPECT_GE(min_eigenvalue(p), floor - 1e-10);
      // Nearest in Frobenius norm among matrices with spectrum >= floor.
      const double d = frobenius(sub(a, p));
      for (int c = 0; c < 20; ++c) {
        const Matrix cand = random_psd(rng, 8, floor);
        EXPECT_LE(d, frobenius(sub(a, cand)) + 1e-9);
      }
    }
  }
}

TEST(ProjectL1Box, FeasibleUnchanged) {
  const FeasibleSet s{1.0, 0.5};
  const Vector x = {0.2, -0.3, 0.1};
  EXPECT_EQ(project_l1_box(x, s), x);
}

TEST(ProjectL1Box, SingleActiveConstraint) {
  const Vector y = project_l1_box(Vector{2.0, 0.0}, FeasibleSet{1.0, 1.0});
  EXPECT_NEAR(y[0], 1.0, 1e-15);
  EXPECT_NEAR(y[1], 0.0, 1e-15);
}

TEST(ProjectL1Box, ZeroCapsGiveZero) {
  const Vector y = project_l1_box(Vector{1.0, -2.0, 3.0}, FeasibleSet{0.0, 0.5});
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(ProjectL1Box, MatchesBisectionOracleAndBeatsFeasiblePoints) {
  CounterRng rng(14, {});
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 1 + rng.index(12);
    const FeasibleSet s{rng.uniform(0.05, 2.0), rng.uniform(0.02, 0.8)};
    const Vector x = random_vector(rng, n, rng.uniform(0.1, 3.0));
    const Vector y = project_l1_box(x, s);
    ASSERT_LE(norm1(y), s.gross_cap + 1e-9);
    ASSERT_LE(norm_inf(y), s.name_cap + 1e-12);
    const Vector o = projection_bisection_oracle(x, s);
    EXPECT_LE(norm_inf(sub(y, o)), 1e-9);
    const double dy = std::sqrt(dist2(x, y));
    for (int c = 0; c < 100; ++c) {
      const Vector z = random_feasible(rng, n, s);
      EXPECT_LE(dy, std::sqrt(dist2(x, z)) + 1e-9);
    }
  }
}

TEST(ProjectL1Box, MatchesLatticeSearchInFiveDimensions) {
  CounterRng rng(15, {});
  for (int rep = 0; rep < 30; ++rep) {
    const FeasibleSet s{rng.uniform(0.3, 1.5), rng.uniform(0.1, 0.6)};
    const Vector x = random_vector(rng, 5, 1.0);
    const Vector y = project_l1_box(x, s);
    const Vector g = lattice_search(5, s, [&](const Vector& c) { return -dist2(x, c); });
    const double dy = std::sqrt(dist2(x, y));
    const double dg = std::sqrt(dist2(x, g));
    EXPECT_LE(dy, dg + 1e-12);
    EXPECT_LE(dg - dy, 2e-3);
  }
}

TEST(ConcaveQp, PriceEqualToThetaGivesZero) {
  CounterRng rng(16, {});
  const Vector theta = random_vector(rng, 4);
  const auto r = solve_concave_qp(theta, random_psd(rng, 4, 0.1), theta, FeasibleSet{1.0, 0.5});
  EXPECT_LE(norm_inf(r.x), 1e-9);
}

TEST(ConcaveQp, InteriorClosedForm) {
  const auto r = solve_concave_qp(Vector{1.0, 0.0}, Matrix::identity(2), Vector{0.5, 0.0}, FeasibleSet{10.0, 10.0});
  EXPECT_NEAR(r.x[0], 0.5, 1e-8);
  EXPECT_NEAR(r.x[1], 0.0, 1e-8);
}

TEST(ConcaveQp, InteriorClosedFormRandom) {
  CounterRng rng(17, {});
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix h = random_psd(rng, 6, 1.0);
    const Vector theta = random_vector(rng, 6, 0.1);
    const Vector want = solve_spd(h, theta);
    const auto r = solve_concave_qp(theta, h, Vector(6, 0.0), FeasibleSet{100.0, 100.0});
    EXPECT_LE(norm_inf(sub(r.x, want)), 1e-6);
  }
}

TEST(ConcaveQp, BindingNameCapMatchesGrid) {
  const FeasibleSet s{1.0, 0.2};
  const Vector theta = {10.0, 0.0};
  const Matrix h = Matrix::identity(2);
  const Vector p = {0.0, 0.0};
  const auto r = solve_concave_qp(theta, h, p, s);
  // Dense 2-D grid at 1e-3 over the box.
  double best = -std::numeric_limits<double>::infinity();
  Vector arg(2);
  for (int a = -200; a <= 200; ++a) {
    for (int b = -200; b <= 200; ++b) {
      const Vector d = {a * 1e-3, b * 1e-3};
      if (!s.contains(d)) continue;
      const double f = concave_objective(theta, h, p, d);
      if (f > best) {
        best = f;
        arg = d;
      }
    }
  }
  EXPECT_NEAR(r.x[0], 0.2, 1e-9);
  EXPECT_NEAR(r.x[1], 0.0, 1e-9);
  EXPECT_LE(norm_inf(sub(r.x, arg)), 1e-3);
  EXPECT_GE(r.objective, best - 1e-12);
}

TEST(ConcaveQp, RevealedPreferenceAndVariationalInequality) {
  CounterRng rng(18, {});
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 2 + rng.index(15);
    const FeasibleSet s{rng.uniform(0.3, 1.5), rng.uniform(0.05, 0.4)};
    const Matrix h = random_psd(rng, n, 0.05);
    const Vector theta = random_vector(rng, n, 2.0);
    const Vector p = random_vector(rng, n, 0.5);
    const auto r = solve_concave_qp(theta, h, p, s);
    ASSERT_TRUE(s.contains(r.x));
    const Vector g = sub(sub(theta, matvec(h, r.x)), p);
    for (int c = 0; c < 1000; ++c) {
      const Vector d = random_feasible(rng, n, s);
      EXPECT_GE(r.objective, concave_objective(theta, h, p, d) - 1e-6);
      EXPECT_LE(dot(g, sub(d, r.x)), 1e-6);
    }
  }
}

TEST(ConcaveQp, MatchesLatticeSearchInFiveDimensions) {
  CounterRng rng(19, {});
  for (int rep = 0; rep < 15; ++rep) {
    const FeasibleSet s{rng.uniform(0.3, 1.2), rng.uniform(0.1, 0.4)};
    const Matrix h = random_psd(rng, 5, 0.1);
    const Vector theta = random_vector(rng, 5, 2.0);
    const Vector p(5, 0.0);
    const auto r = solve_concave_qp(theta, h, p, s);
    const Vector g = lattice_search(5, s, [&](const Vector& d) { return concave_objective(theta, h, p, d); });
    EXPECT_GE(r.objective, concave_objective(theta, h, p, g) - 1e-9);
    EXPECT_LE(norm_inf(sub(r.x, g)), 2e-2);
  }
}

TEST(ConcaveQp, RejectsIndefiniteCurvature) {
  EXPECT_THROW(solve_concave_qp(Vector{1.0, 0.0}, Matrix::from_rows({{1.0, 0.0}, {0.0, -1.0}}), Vector{0.0, 0.0},
                                FeasibleSet{1.0, 1.0}),
               ContractViolation);
}

TEST(ConcaveQp, IterationCapReportsBestIterate) {
  CounterRng rng(20, {});
  const Matrix h = random_psd(rng, 10, 1e-4);
  QpOptions opts;
  opts.max_iter = 2;
  try {
    solve_concave_qp(random_vector(rng, 10), h, Vector(10, 0.0), FeasibleSet{100.0, 100.0}, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.best_iterate().size(), 10u);
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(BoxQp, ClosedFormDiagonal) {
  const Matrix h = Matrix::diagonal(Vector{2.0, 1.0, 4.0});
  const auto r = solve_box_qp(Vector{4.0, -3.0, 1.0}, h, Vector{0.0, -1.0, 0.0}, Vector{1.0, 1.0, 1.0});
  EXPECT_NEAR(r.x[0], 1.0, 1e-9);
  EXPECT_NEAR(r.x[1], -1.0, 1e-9);
  EXPECT_NEAR(r.x[2], 0.25, 1e-9);
}

// Exhaustive active-set oracle: for each subset of flagged coordinates
// pinned at zero, solve the ridge normal equations on the rest.
double nnls_enumeration_oracle(const Matrix& d, std::span<const double> t, const std::vector<bool>& flagged,
                               double ridge) {
  const std::size_t n = d.cols();
  std::vector<std::size_t> fl;
  for (std::size_t i = 0; i < n; ++i)
    if (flagged[i]) fl.push_back(i);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << fl.size()); ++mask) {
    std::vector<bool> pinned(n, false);
    for (std::size_t b = 0; b < fl.size(); ++b)
      if (mask & (std::size_t{1} << b)) pinned[fl[b]] = true;
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
      if (!pinned[i]) free.push_back(i);
    Vector x(n, 0.0);
    if (!free.empty()) {
      Matrix sub_d(d.rows(), free.size());
      for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < free.size(); ++c) sub_d(r, c) = d(r, free[c]);
      Matrix nm = matmul_tn(sub_d, sub_d);
      for (std::size_t c = 0; c < free.size(); ++c) nm(c, c) += ridge;
      const Vector sol = solve_spd(nm, matvec_t(sub_d, t));
      for (std::size_t c = 0; c < free.size(); ++c) x[free[c]] = sol[c];
    }
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i)
      if (flagged[i] && x[i] < -1e-12) ok = false;
    if (ok) best = std::min(best, nnls_objective(d, t, ridge, x));
  }
  return best;
}

TEST(NnlsRidge, UnconstrainedSquareSolve) {
  const Matrix d = Matrix::from_rows({{2.0, 1.0}, {1.0, 3.0}});
  const Vector want = {0.3, -0.7};
  const Vector x = nnls_ridge(d, matvec(d, want), {false, false}, 0.0);
  EXPECT_NEAR(x[0], want[0], 1e-7);
  EXPECT_NEAR(x[1], want[1], 1e-7);
}

TEST(NnlsRidge, FlaggedCoordinateClamped) {
  const Matrix d = Matrix::identity(2);
  const Vector x = nnls_ridge(d, Vector{-1.0, 2.0}, {true, false}, 0.0);
  EXPECT_EQ(x[0], 0.0);
  EXPECT_NEAR(x[1], 2.0, 1e-7);
}

TEST(NnlsRidge, MatchesEnumerationOracle) {
  CounterRng rng(21, {});
  for (int rep = 0; rep < 200; ++rep) {
    Matrix d(20, 4);
    for (auto& x : d.data()) x = rng.normal();
    const Vector t = random_vector(rng, 20);
    std::vector<bool> flagged(4);
    for (std::size_t i = 0; i < 4; ++i) flagged[i] = rng.uniform() < 0.7;
    const double ridge = rng.uniform() < 0.5 ? 0.0 : rng.uniform(1e-3, 1.0);
    const Vector x = nnls_ridge(d, t, flagged, ridge);
    for (std::size_t i = 0; i < 4; ++i)
      if (flagged[i]) EXPECT_GE(x[i], 0.0);
    EXPECT_NEAR(nnls_objective(d, t, ridge, x), nnls_enumeration_oracle(d, t, flagged, ridge), 1e-6);
  }
}

TEST(NnlsRidge, DimensionMismatch) {
  EXPECT_THROW(nnls_ridge(Matrix(3, 2), Vector(2), {false, false}, 0.0), ContractViolation);
}

TEST(CounterRng, ReplayIsIdentical) {
  CounterRng a(99, {1, 2, 3});
  CounterRng b(99, {1, 2, 3});
  CounterRng c(99, {1, 2, 4});
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
}

TEST(CounterRng, UniformAndNormalMoments) {
  CounterRng rng(5, {});
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    su += rng.uniform();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 4 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sn / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 4 * std::sqrt(2.0 / n));
}

}  // namespace
}  // namespace qcross
