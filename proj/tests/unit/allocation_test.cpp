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

#include <cmath>
#include <memory>

#include "qcross/allocation/allocation.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/projection.hpp"

namespace qcross {
namespace {

std::shared_ptr<const MarketModel> baseline_market(std::uint64_t seed = 1) {
  return std::make_shared<const MarketModel>(synthetic_market({}, {}, seed, "M"));
}

Vector normals(std::size_t n, double scale, CounterRng& rng) {
  Vector v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

InferredValueTable random_table(std::size_t n, std::size_t kmax, std::size_t m, CounterRng& rng) {
  InferredValueTable t;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Candidate> k{{Vector(m, 0.0), 0.0, true}};
    const std::size_t extra = rng.index(kmax);
    for (std::size_t r = 0; r < extra; ++r) k.push_back({normals(m, 0.5, rng), rng.normal() * 0.3, false});
    t.candidates.push_back(std::move(k));
  }
  return t;
}

Matrix random_spd(std::size_t m, CounterRng& rng) {
  Matrix b(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) b(i, j) = rng.normal();
  Matrix g = scaled(matmul_tn(b, b), 1.0 / static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) g(i, i) += 0.1;
  return g;
}

TEST(InferredValues, EmptyReportsGiveNoTradeOnly) {
  const InferredValueTable t = build_inferred_values(ReportSet(3, 2));
  ASSERT_EQ(t.n(), 3u);
  for (const auto& k : t.candidates) {
    ASSERT_EQ(k.size(), 1u);
    EXPECT_EQ(k[0].value, 0.0);
    EXPECT_EQ(norm_inf(k[0].package), 0.0);
  }
}

TEST(InferredValues, ExactOverridesBound) {
  ReportSet set(1, 2);
  // p^T d = 0.3 / 0.35 so the bound is 0.3.
  set.add(DemandReport{0, 1, Vector{0.3 / 0.35, 0.0}, Vector{1.0, 0.0}, 0.0});
  set.add(ValueReport{0, 1, Vector{1.0, 0.0}, 0.9, ValueTag::kBridge});
  const auto t = build_inferred_values(set);
  ASSERT_EQ(t.candidates[0].size(), 2u);
  EXPECT_EQ(t.candidates[0][1].value, 0.9);
  EXPECT_TRUE(t.candidates[0][1].exact);
}

TEST(InferredValues, RepeatedDemandTakesLargestBound) {
  ReportSet set(1, 2);
  set.add(DemandReport{0, 1, Vector{0.2, 0.0}, Vector{1.0, 0.0}, 0.0});
  set.add(DemandReport{0, 2, Vector{0.5, 0.0}, Vector{1.0, 0.0}, 0.0});
  set.add(DemandReport{0, 3, Vector{0.1, 0.0}, Vector{1.0 + 5e-11, 0.0}, 0.0});
  InferenceOptions o;
  o.rho_dq = 1.0;
  const auto t = build_inferred_values(set, o);
  ASSERT_EQ(t.candidates[0].size(), 2u);
  EXPECT_EQ(t.candidates[0][1].value, 0.5);
  o.rho_dq = 0.35;
  EXPECT_NEAR(build_inferred_values(set, o).candidates[0][1].value, 0.35 * 0.5, 1e-15);
}

TEST(InferredValues, MinimumSizeFilterDropsSmallPackages) {
  ReportSet set(1, 2);
  set.add(DemandReport{0, 1, Vector{0.2, 0.0}, Vector{0.1, 0.0}, 0.0});
  set.add(ValueReport{0, 1, Vector{0.6, 0.0}, 0.4, ValueTag::kModelGuided});
  InferenceOptions o;
  o.min_l1 = 0.5;
  const auto t = build_inferred_values(set, o);
  ASSERT_EQ(t.candidates[0].size(), 2u);
  EXPECT_EQ(t.candidates[0][1].package[0], 0.6);
}

TEST(Wdp, SingleParticipantHandExample) {
  // Psi(-q) = 0.4 with Gamma = 0.8 and q = 1.
  InferredValueTable t;
  t.candidates.push_back({{Vector{0.0}, 0.0, true}, {Vector{1.0}, 1.0, true}});
  const Matrix g = Matrix::from_rows({{0.8}});
  for (const auto& sol : {solve_wdp_enumeration(t, g), solve_wdp_branch_and_bound(t, g)}) {
    EXPECT_EQ(sol.selection, (std::vector<std::size_t>{1}));
    EXPECT_NEAR(sol.reported_welfare, 0.6, 1e-15);
  }
}

TEST(Wdp, ZeroValuesSelectNoTrade) {
  CounterRng rng(1, {});
  InferredValueTable t = random_table(4, 5, 3, rng);
  for (auto& k : t.candidates)
    for (auto& c : k) c.value = 0.0;
  const Matrix g = random_spd(3, rng);
  EXPECT_EQ(solve_wdp_enumeration(t, g).selection, std::vector<std::size_t>(4, 0));
  EXPECT_EQ(solve_wdp_branch_and_bound(t, g).selection, std::vector<std::size_t>(4, 0));
}

TEST(Wdp, TiesGoToLexicographicallySmallestSelection) {
  InferredValueTable t;
  // Identical packages and values for candidates 1 and 2 of each participant.
  for (int i = 0; i < 2; ++i)
    t.candidates.push_back({{Vector{0.0, 0.0}, 0.0, true}, {Vector{1.0, 0.0}, 1.0, true}, {Vector{1.0, 0.0}, 1.0, true}});
  const Matrix g = scaled(Matrix::identity(2), 0.1);
  const auto e = solve_wdp_enumeration(t, g);
  const auto b = solve_wdp_branch_and_bound(t, g);
  EXPECT_EQ(e.selection, (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(b.selection, e.selection);
}

TEST(Wdp, BranchAndBoundMatchesEnumeration) {
  CounterRng rng(2, {});
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 1 + rng.index(6);
    const std::size_t m = 1 + rng.index(5);
    const InferredValueTable t = random_table(n, 6, m, rng);
    const Matrix g = random_spd(m, rng);
    const auto e = solve_wdp_enumeration(t, g);
    const auto b = solve_wdp_branch_and_bound(t, g);
    EXPECT_TRUE(b.exact);
    EXPECT_EQ(b.selection, e.selection);
    EXPECT_EQ(b.reported_welfare, e.reported_welfare);
    EXPECT_EQ(report_welfare(t, g, e.selection), e.reported_welfare);
  }
}

TEST(Wdp, DispatchUsesBranchAndBoundAboveLimit) {
  CounterRng rng(3, {});
  const InferredValueTable t = random_table(6, 6, 3, rng);
  const Matrix g = random_spd(3, rng);
  WdpOptions o;
  o.enumeration_limit = 1.0;
  const auto b = solve_wdp(t, g, o);
  EXPECT_EQ(b.selection, solve_wdp_enumeration(t, g).selection);
}

TEST(Wdp, JsonRoundTrip) {
  CounterRng rng(4, {});
  const InferredValueTable t = random_table(3, 4, 2, rng);
  const InferredValueTable u = table_from_json(table_to_json(t));
  ASSERT_EQ(u.n(), t.n());
  for (std::size_t i = 0; i < t.n(); ++i) {
    ASSERT_EQ(u.candidates[i].size(), t.candidates[i].size());
    for (std::size_t r = 0; r < t.candidates[i].size(); ++r) {
      EXPECT_EQ(u.candidates[i][r].package, t.candidates[i][r].package);
      EXPECT_EQ(u.candidates[i][r].value, t.candidates[i][r].value);
    }
  }
}

TEST(Dual, ZeroThetaZeroPrice) {
  auto mm = baseline_market();
  EconomyCell cell = make_cell(mm, {}, 5);
  for (auto& p : cell.participants) {
    p.theta.assign(mm->m, 0.0);
  }
  EXPECT_NEAR(true_dual(cell, Vector(mm->m, 0.0)).value, 0.0, 1e-15);
}

TEST(Dual, WeakDualityAndGapIdentity) {
  auto mm = baseline_market(2);
  CounterRng rng(6, {});
  for (int c = 0; c < 10; ++c) {
    EconomyCell cell = make_cell(mm, {}, 100 + static_cast<std::uint64_t>(c));
    const double w_star = ensure_oracle(cell).welfare;
    for (int rep = 0; rep < 5; ++rep) {
      const Vector p = normals(mm->m, rng.uniform(0.01, 0.5), rng);
      const DualValue dv = true_dual(cell, p);
      EXPECT_LE(w_star, dv.value + 1e-8);
      Vector xi(mm->m, 0.0);
      for (const auto& d : dv.demands) xi = sub(xi, d);
      const Vector z = add(xi, matvec(mm->Gamma_inv, p));
      EXPECT_NEAR(dv.value - welfare(cell, dv.demands), 0.5 * quad_form(mm->Gamma, z), 1e-8);
    }
  }
}

TEST(Dual, CertificateAtOracleFixedPointClosesGap) {
  auto mm = baseline_market(3);
  EconomyCell cell = make_cell(mm, {}, 7);
  const auto& oracle = ensure_oracle(cell);
  // Market-clearing price p = Gamma s at the optimum makes d_i(p) = d_i*.
  Vector s(mm->m, 0.0);
  for (const auto& d : oracle.allocation.trades) s = add(s, d);
  const Vector p = matvec(mm->Gamma, s);
  const DualCertificate c = certificate(cell, p, oracle.allocation.trades);
  EXPECT_GE(c.gap, -1e-8);
  EXPECT_LT(c.gap, 1e-6);
  const DualCertificate z = certificate(cell, Vector(mm->m, 0.0), std::vector<Vector>(cell.n(), Vector(mm->m, 0.0)));
  EXPECT_GE(z.gap, 0.0);
  EXPECT_EQ(z.welfare, 0.0);
}

TEST(Dual, CertificateBoundsWelfareLoss) {
  auto mm = baseline_market(4);
  CounterRng rng(8, {});
  for (int rep = 0; rep < 50; ++rep) {
    EconomyCell cell = make_cell(mm, {}, 300 + static_cast<std::uint64_t>(rep % 10));
    const double w_star = ensure_oracle(cell).welfare;
    std::vector<Vector> a;
    for (const auto& p : cell.participants) a.push_back(project_l1_box(normals(mm->m, 0.05, rng), p.feasible));
    const auto cert = certificate(cell, normals(mm->m, 0.1, rng), a);
    EXPECT_LE(w_star - cert.welfare, cert.gap + 1e-7);
  }
}

TEST(Incumbent, IdenticalAllocationsPass) {
  auto mm = baseline_market();
  const EconomyCell cell = make_cell(mm, {}, 9);
  const std::vector<Vector> a(cell.n(), Vector(mm->m, 0.0));
  EXPECT_TRUE(final_vs_incumbent_check(cell, a, a));
}

TEST(Incumbent, ReportWelfareIsValidUnderLowerBounds) {
  auto mm = baseline_market(5);
  for (int c = 0; c < 20; ++c) {
    const EconomyCell cell = make_cell(mm, {}, 500 + static_cast<std::uint64_t>(c));
    ReportSet set(cell.n(), mm->m);
    CounterRng rng(10, {static_cast<std::uint64_t>(c)});
    for (std::size_t round = 1; round <= 4; ++round) {
      const Vector p = normals(mm->m, 0.2, rng);
      for (const auto& part : cell.participants) set.add(demand_query(part, p, ResponseMode::exact(), rng, 0.35, round));
    }
    const auto sol = solve_wdp(build_inferred_values(set), mm->Gamma);
    EXPECT_GE(welfare(cell, sol.trades), sol.reported_welfare - 1e-9);
  }
}

}  // namespace
}  // namespace qcross
