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

#include "qcross/economy/economy.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/qp.hpp"

namespace qcross {
namespace {

std::shared_ptr<const MarketModel> baseline_market(std::uint64_t seed = 1) {
  return std::make_shared<const MarketModel>(synthetic_market({}, {}, seed, "M"));
}

// Sigma = I, Delta = I, Gamma = gamma_res I, no factors.
std::shared_ptr<const MarketModel> identity_market(std::size_t m, double gamma_res) {
  MarketParams p;
  p.k = 0;
  p.gamma_res = gamma_res;
  p.normalize_sigma = false;
  return std::make_shared<const MarketModel>(assemble_market(Matrix::identity(m), Vector(m, 1.0), p));
}

ProfileParams loose_profile(double g = 100.0, double c = 100.0) {
  ProfileParams p = default_profiles()[0];
  p.gross_cap = g;
  p.name_cap = c;
  return p;
}

TEST(Value, ZeroTradeIsZero) {
  const auto mm = baseline_market();
  CounterRng rng(1, {});
  const Participant p = draw_participant(default_profiles()[1], *mm, 0.5, 1, {}, rng);
  EXPECT_EQ(value(p, Vector(mm->m, 0.0)), 0.0);
}

TEST(Value, ScalarCase) {
  const auto mm = identity_market(2, 1.0);
  // lambda = 0, gamma = 0, rho = 1 gives H = I; theta = e1 via alpha.
  const Participant p = make_participant(loose_profile(), *mm, 0.0, 0.0, 1.0, {0.0, 0.0}, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(value(p, Vector{1.0, 0.0}), 0.5);
}

TEST(Value, MatchesDenseEvaluation) {
  const auto mm = baseline_market();
  CounterRng rng(2, {});
  for (int rep = 0; rep < 100; ++rep) {
    const Participant p = draw_participant(default_profiles()[rep % 5], *mm, 0.5, 1, {}, rng);
    Vector d(mm->m);
    for (auto& x : d) x = rng.normal() * 0.1;
    const Matrix h = combine(p.lambda, mm->Sigma, p.gamma, mm->Delta);
    double quad = 0.0;
    for (std::size_t a = 0; a < mm->m; ++a)
      for (std::size_t b = 0; b < mm->m; ++b) quad += d[a] * (h(a, b) + (a == b ? p.rho : 0.0)) * d[b];
    double lin = 0.0;
    for (std::size_t a = 0; a < mm->m; ++a) lin += p.theta[a] * d[a];
    EXPECT_NEAR(value(p, d), lin - 0.5 * quad, 1e-12);
  }
}

TEST(Complementarity, DisjointSupportsUnderDiagonalCurvature) {
  const auto mm = identity_market(3, 1.0);
  const Participant p = make_participant(loose_profile(), *mm, 0.0, 0.0, 1.0, Vector(3, 0.0), {0.3, 0.1, 0.2});
  EXPECT_EQ(complementarity(p, Vector{1.0, 0.0, 0.0}, Vector{0.0, 1.0, 0.0}), 0.0);
}

TEST(Complementarity, OffDiagonalCurvature) {
  MarketParams mp;
  mp.k = 0;
  mp.normalize_sigma = false;
  // H = lambda Sigma with Sigma = [[1, .5], [.5, 1]].
  const auto mm = std::make_shared<const MarketModel>(
      assemble_market(Matrix::from_rows({{1.0, 0.5}, {0.5, 1.0}}), Vector(2, 1.0), mp));
  const Participant p = make_participant(loose_profile(), *mm, 1.0, 0.0, 0.0, Vector(2, 0.0), {0.2, -0.1});
  const Vector g = {1.0, 0.0}, h = {0.0, 1.0};
  const double direct = value(p, add(g, h)) - value(p, g) - value(p, h);
  EXPECT_NEAR(direct, -0.5, 1e-15);
  EXPECT_NEAR(complementarity(p, g, h), -0.5, 1e-15);
}

TEST(Complementarity, SameDirectionSubstitution) {
  const auto mm = identity_market(2, 1.0);
  const Participant p = make_participant(loose_profile(), *mm, 0.0, 0.0, 1.0, Vector(2, 0.0), Vector(2, 0.0));
  const Vector e1 = {1.0, 0.0};
  EXPECT_NEAR(value(p, add(e1, e1)) - 2.0 * value(p, e1), -1.0, 1e-15);
  EXPECT_NEAR(complementarity(p, e1, e1), -1.0, 1e-15);
}

TEST(Complementarity, IdentityAcrossProfiles) {
  const auto mm = baseline_market();
  CounterRng rng(3, {});
  for (const auto& prof : default_profiles()) {
    for (int rep = 0; rep < 1000; ++rep) {
      const Participant p = draw_participant(prof, *mm, 0.5, 1, {}, rng);
      Vector g(mm->m), h(mm->m);
      for (auto& x : g) x = rng.normal() * 0.2;
      for (auto& x : h) x = rng.normal() * 0.2;
      const double vgh = value(p, add(g, h));
      const double lhs = vgh - value(p, g) - value(p, h);
      EXPECT_LE(std::abs(lhs + dot(g, matvec(p.H, h))), 1e-10 * (1.0 + std::abs(vgh)));
    }
  }
}

TEST(DrawParticipant, ProfileTable) {
  const auto& ix = profile_by_name("Indexer");
  EXPECT_EQ(ix.lambda_bar, 2.60);
  EXPECT_EQ(ix.gamma_bar, 0.36);
  EXPECT_EQ(ix.gross_cap, 1.30);
  EXPECT_EQ(ix.name_cap, 0.16);
  EXPECT_EQ(profile_by_name("Dealer").lambda_bar, 3.00);
  EXPECT_EQ(profile_by_name("Active").name_cap, 0.20);
  EXPECT_EQ(profile_by_name("Hedge").gross_cap, 1.15);
  EXPECT_EQ(profile_by_name("ETF").gamma_bar, 0.30);
}

TEST(DrawParticipant, PrimitivesRespectInvariants) {
  const auto mm = baseline_market();
  CounterRng rng(4, {});
  for (int rep = 0; rep < 200; ++rep) {
    const auto& prof = default_profiles()[rep % 5];
    const Participant p = draw_participant(prof, *mm, rng.uniform(), rep % 2 ? 1 : -1, {}, rng);
    EXPECT_GE(p.lambda, 0.8 * prof.lambda_bar);
    EXPECT_LE(p.lambda, 1.2 * prof.lambda_bar);
    EXPECT_GE(p.gamma, 0.8 * prof.gamma_bar);
    EXPECT_LE(p.gamma, 1.2 * prof.gamma_bar);
    EXPECT_EQ(p.rho, 0.05);
    EXPECT_TRUE(p.feasible.contains(p.tau));
    EXPECT_TRUE(all_finite(p.theta));
    const Vector hd = add(matvec(p.H, p.tau), p.alpha);
    EXPECT_LE(norm_inf(sub(hd, p.theta)), 1e-15);
    std::size_t nz = 0;
    for (double a : p.alpha) nz += a != 0.0;
    if (prof.kind == ProfileKind::kActive) EXPECT_LE(nz, 3u);
    if (prof.kind == ProfileKind::kIndexer || prof.kind == ProfileKind::kEtf || prof.kind == ProfileKind::kHedge)
      EXPECT_EQ(nz, 0u);
  }
}

TEST(DrawParticipant, FullContraLiquidityIsCentered) {
  const auto mm = baseline_market();
  CounterRng rng(5, {});
  const std::size_t draws = 500;
  Vector sum(mm->m, 0.0), sum2(mm->m, 0.0);
  for (std::size_t r = 0; r < draws; ++r) {
    const int side = rng.uniform() < 0.5 ? -1 : 1;
    const Participant p = draw_participant(default_profiles()[0], *mm, 1.0, side, {}, rng);
    for (std::size_t j = 0; j < mm->m; ++j) {
      sum[j] += p.tau[j];
      sum2[j] += p.tau[j] * p.tau[j];
    }
  }
  for (std::size_t j = 0; j < mm->m; ++j) {
    const double mean = sum[j] / draws;
    const double sd = std::sqrt(sum2[j] / draws - mean * mean);
    EXPECT_LT(std::abs(mean), 3.0 * sd / std::sqrt(double(draws)) + 1e-12);
  }
}

TEST(DrawParticipant, NoContraLiquiditySharesSide) {
  CounterRng rng(6, {});
  for (int side : {-1, 1}) {
    for (int r = 0; r < 500; ++r) {
      const Vector z = factor_shock(5, 0.0, side, 0.6, rng);
      EXPECT_GE(side * z[0], 0.0);
    }
  }
}

TEST(Cell, ProfilesCycleThenDraw) {
  const auto mm = baseline_market();
  const EconomyCell cell = make_cell(mm, {}, 42);
  ASSERT_EQ(cell.n(), 8u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(cell.participants[i].profile.name, default_profiles()[i].name);
  const EconomyCell again = make_cell(mm, {}, 42);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(cell.participants[i].theta, again.participants[i].theta);
}

TEST(Oracle, ZeroThetaGivesZero) {
  const auto mm = identity_market(3, 1.0);
  EconomyCell cell;
  cell.market = mm;
  for (std::size_t i = 0; i < 3; ++i)
    cell.participants.push_back(
        make_participant(loose_profile(1.0, 0.5), *mm, 1.0, 0.0, 0.05, Vector(3, 0.0), Vector(3, 0.0), i));
  const auto sol = oracle_allocation(cell);
  EXPECT_EQ(sol.welfare, 0.0);
  for (const auto& d : sol.allocation.trades) EXPECT_LE(norm_inf(d), 1e-12);
}

TEST(Oracle, OffsettingPairMatchesGrid) {
  const auto mm = identity_market(2, 1.0);
  const Vector theta = {0.8, -0.3};
  EconomyCell cell;
  cell.market = mm;
  cell.participants.push_back(make_participant(loose_profile(), *mm, 0.0, 0.0, 1.0, Vector(2, 0.0), theta, 0));
  cell.participants.push_back(
      make_participant(loose_profile(), *mm, 0.0, 0.0, 1.0, Vector(2, 0.0), scaled(theta, -1.0), 1));
  const auto sol = oracle_allocation(cell);
  // By symmetry d2 = -d1; search d1 on a refined 2-D grid.
  double best = -INFINITY, ca = 0.0, cb = 0.0;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const double a0 = ca, b0 = cb;
    for (int i = -150; i <= 150; ++i)
      for (int j = -150; j <= 150; ++j) {
        const Vector d1 = {a0 + i * h, b0 + j * h};
        const double w = welfare(cell, {d1, scaled(d1, -1.0)});
        if (w > best) {
          best = w;
          ca = d1[0];
          cb = d1[1];
        }
      }
  }
  EXPECT_NEAR(sol.welfare, best, 1e-4);
  EXPECT_GE(sol.welfare, best - 1e-12);
  EXPECT_LE(norm_inf(add(sol.allocation.trades[0], sol.allocation.trades[1])), 1e-6);
}

TEST(Oracle, SingleParticipantClosedFormAndLargeCostLimit) {
  const Vector theta = {0.4, -0.2, 0.1};
  double last = INFINITY;
  for (double c : {0.5, 5.0, 50.0, 5000.0}) {
    const auto mm = identity_market(3, c);
    EconomyCell cell;
    cell.market = mm;
    cell.participants.push_back(make_participant(loose_profile(), *mm, 0.0, 0.0, 1.0, Vector(3, 0.0), theta));
    const auto sol = oracle_allocation(cell);
    // (H + Gamma) d = theta with H = I, Gamma = c I.
    const Vector want = scaled(theta, 1.0 / (1.0 + c));
    EXPECT_LE(norm_inf(sub(sol.allocation.trades[0], want)), 1e-8);
    EXPECT_LT(norm_inf(sol.allocation.trades[0]), last);
    last = norm_inf(sol.allocation.trades[0]);
  }
  EXPECT_LT(last, 1e-3);
}

TEST(Oracle, EfficiencyEndpoints) {
  const auto mm = baseline_market();
  EconomyCell cell = make_cell(mm, {}, 7);
  const auto& sol = ensure_oracle(cell);
  ASSERT_GT(sol.welfare, kMinOracleWelfare);
  EXPECT_EQ(efficiency(sol.allocation.welfare, sol.welfare), 1.0);
  EXPECT_EQ(efficiency(no_trade(cell).welfare, sol.welfare), 0.0);
  EXPECT_TRUE(std::isnan(efficiency(0.0, 0.0)));
}

TEST(Oracle, BlocksAreStationary) {
  const auto mm = baseline_market();
  const EconomyCell cell = make_cell(mm, {}, 8);
  const auto sol = oracle_allocation(cell);
  // Each block is optimal given the others: re-solving any block can not help.
  const auto& d = sol.allocation.trades;
  Vector total(cell.m(), 0.0);
  for (const auto& x : d) total = add(total, x);
  for (std::size_t i = 0; i < cell.n(); ++i) {
    const Vector others = sub(total, d[i]);
    const Matrix hb = add(cell.participants[i].H, mm->Gamma);
    QpOptions qo;
    qo.tol = 1e-15;
    const auto r = solve_concave_qp(cell.participants[i].theta, hb, matvec(mm->Gamma, others),
                                    cell.participants[i].feasible, qo);
    std::vector<Vector> alt = d;
    alt[i] = r.x;
    EXPECT_LE(welfare(cell, alt) - sol.welfare, 1e-9 * (1.0 + sol.welfare));
  }
}

TEST(Oracle, RelaxingCapsNeverHurts) {
  const auto mm = baseline_market();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const EconomyCell cell = make_cell(mm, {}, 100 + s);
    EconomyCell relaxed = cell;
    for (auto& p : relaxed.participants) p.feasible = p.feasible.scaled(2.0);
    const double w = oracle_allocation(cell).welfare;
    const double wr = oracle_allocation(relaxed).welfare;
    EXPECT_GE(wr, w - 1e-9 * (1.0 + w));
  }
}

TEST(Oracle, BaselineCellsHavePositiveBenchmark) {
  const auto mm = baseline_market();
  int positive = 0;
  for (std::uint64_t s = 0; s < 40; ++s) positive += oracle_allocation(make_cell(mm, {}, 500 + s)).welfare > 1e-10;
  EXPECT_GE(positive, 38);
}

TEST(Cell, JsonRoundTrip) {
  const auto mm = baseline_market();
  EconomyCell cell = make_cell(mm, {}, 9);
  ensure_oracle(cell);
  const EconomyCell back = cell_from_json(cell_to_json(cell), mm);
  ASSERT_EQ(back.n(), cell.n());
  for (std::size_t i = 0; i < cell.n(); ++i) {
    EXPECT_EQ(back.participants[i].theta, cell.participants[i].theta);
    EXPECT_EQ(back.participants[i].H, cell.participants[i].H);
  }
  EXPECT_EQ(back.oracle->welfare, cell.oracle->welfare);
}

}  // namespace
}  // namespace qcross
