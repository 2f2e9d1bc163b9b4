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
#include <filesystem>
#include <numeric>

#include "qcross/market/market_model.hpp"
#include "qcross/market/panel.hpp"
#include "qcross/numerics/eig.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {
namespace {

ReturnPanel complete_panel(std::size_t t, std::size_t m, std::uint64_t seed, double vol = 1.0) {
  CounterRng rng(seed, {});
  ReturnPanel p;
  for (std::size_t i = 0; i < t; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "2020-01-%02zu", 1 + i % 28);
    p.dates.push_back(std::to_string(1000 + i / 28) + std::string(buf).substr(4));
  }
  p.returns = Matrix(t, m);
  for (std::size_t j = 0; j < m; ++j) {
    p.tickers.push_back("T" + std::to_string(100 + j));
    p.market_caps.push_back(1.0 + j);
  }
  for (auto& x : p.returns.data()) x = vol * rng.normal();
  return p;
}

bool same_panel(const ReturnPanel& a, const ReturnPanel& b) {
  if (a.dates != b.dates || a.tickers != b.tickers) return false;
  if (a.returns.rows() != b.returns.rows() || a.returns.cols() != b.returns.cols()) return false;
  for (std::size_t i = 0; i < a.returns.data().size(); ++i) {
    const double x = a.returns.data()[i], y = b.returns.data()[i];
    if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
  }
  for (std::size_t j = 0; j < a.market_caps.size(); ++j) {
    const double x = a.market_caps[j], y = b.market_caps[j];
    if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
  }
  return true;
}

TEST(Panel, ThreeRowFile) {
  const auto p = parse_return_panel(
      "date,ticker,return,market_cap\n"
      "2024-01-02,AAA,0.01,100\n"
      "2024-01-02,BBB,-0.02,200\n"
      "2024-01-02,CCC,,300\n");
  EXPECT_EQ(p.n_dates(), 1u);
  EXPECT_EQ(p.n_tickers(), 3u);
  EXPECT_DOUBLE_EQ(p.returns(0, 1), -0.02);
  EXPECT_TRUE(std::isnan(p.returns(0, 2)));
  EXPECT_DOUBLE_EQ(p.market_caps[2], 300.0);
}

TEST(Panel, DuplicateRowNamed) {
  try {
    parse_return_panel(
        "date,ticker,return,market_cap\n"
        "2024-01-02,AAA,0.01,100\n"
        "2024-01-02,AAA,0.02,100\n");
    FAIL() << "expected PanelError";
  } catch (const PanelError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(Panel, ParseErrorsCarryRow) {
  try {
    parse_return_panel("date,ticker,return,market_cap\n2024-01-02,AAA,abc,1\n");
    FAIL();
  } catch (const PanelError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  EXPECT_THROW(parse_return_panel("date,ticker,return,market_cap\n"), PanelError);
  EXPECT_THROW(parse_return_panel(""), PanelError);
  EXPECT_THROW(parse_return_panel("date,ticker,return,market_cap\n2024-13-02,AAA,0.1,1\n"), PanelError);
}

TEST(Panel, TerminalCapIsLastReported) {
  const auto p = parse_return_panel(
      "date,ticker,return,market_cap\n"
      "2024-01-03,AAA,0.01,150\n"
      "2024-01-02,AAA,0.01,100\n"
      "2024-01-04,AAA,0.01,\n");
  EXPECT_DOUBLE_EQ(p.market_caps[0], 150.0);
}

TEST(Panel, SyntheticRoundTrip) {
  SynthPanelParams sp;
  sp.n_tickers = 20;
  const ReturnPanel p = synth_panel(sp, 7);
  ASSERT_EQ(p.n_dates(), 252u);
  EXPECT_TRUE(std::is_sorted(p.dates.begin(), p.dates.end()));
  EXPECT_EQ(std::adjacent_find(p.dates.begin(), p.dates.end()), p.dates.end());
  const auto path = std::filesystem::temp_directory_path() / "qcross_panel_roundtrip.csv";
  write_return_panel(p, path);
  const ReturnPanel q = ingest_return_panel(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(same_panel(p, q));
}

TEST(Panel, SyntheticIsDeterministic) {
  EXPECT_TRUE(same_panel(synth_panel({}, 3), synth_panel({}, 3)));
  EXPECT_FALSE(same_panel(synth_panel({}, 3), synth_panel({}, 4)));
}

TEST(Screen, CompletePanelUnchanged) {
  const ReturnPanel p = complete_panel(40, 6, 1);
  EXPECT_TRUE(same_panel(screen_universe(p, 0.8, 6), p));
}

TEST(Screen, LowCoverageDropped) {
  ReturnPanel p = complete_panel(40, 4, 2);
  p.market_caps[1] = 1e9;
  for (std::size_t i = 0; i < 20; ++i) p.returns(i, 1) = NAN;
  const ReturnPanel s = screen_universe(p, 0.8, 3);
  EXPECT_EQ(std::find(s.tickers.begin(), s.tickers.end(), p.tickers[1]), s.tickers.end());
  EXPECT_THROW(screen_universe(p, 0.8, 4), PanelError);
}

TEST(Screen, KeepsLargestCaps) {
  ReturnPanel p = complete_panel(35, 30, 3);
  CounterRng rng(3, {9});
  for (auto& c : p.market_caps) c = std::floor(rng.uniform(1.0, 20.0));  // ties exercise the tie-break
  const ReturnPanel s = screen_universe(p, 0.8, 20);
  std::vector<std::size_t> order(30);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::make_pair(-p.market_caps[a], p.tickers[a]) < std::make_pair(-p.market_caps[b], p.tickers[b]);
  });
  std::vector<std::string> want;
  for (std::size_t i = 0; i < 20; ++i) want.push_back(p.tickers[order[i]]);
  std::sort(want.begin(), want.end());
  EXPECT_EQ(s.tickers, want);
}

TEST(Covariance, IidDiagonalOffDiagonalsVanish) {
  const ReturnPanel p = complete_panel(5000, 5, 4);
  const Matrix s = estimate_covariance(p, 0.01, 0.0);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b)
      if (a != b) EXPECT_LT(std::abs(s(a, b)), 0.1);
}

TEST(Covariance, ConstantReturnsGiveZero) {
  ReturnPanel p = complete_panel(50, 3, 5);
  for (auto& x : p.returns.data()) x = 0.01;
  EXPECT_EQ(max_abs(estimate_covariance(p)), 0.0);
}

TEST(Covariance, FullShrinkIsDiagonal) {
  SynthPanelParams sp;
  sp.n_tickers = 8;
  const ReturnPanel p = synth_panel(sp, 6);
  const Matrix s0 = estimate_covariance(p, 0.01, 0.0);
  const Matrix s1 = estimate_covariance(p, 0.01, 1.0);
  for (std::size_t a = 0; a < 8; ++a)
    for (std::size_t b = 0; b < 8; ++b) {
      if (a == b) {
        EXPECT_NEAR(s1(a, a), s0(a, a), 1e-12 * s0(a, a));
      } else {
        EXPECT_EQ(s1(a, b), 0.0);
      }
    }
}

TEST(Covariance, OutputIsPsdAndPairwiseDeletionWorks) {
  SynthPanelParams sp;
  sp.n_tickers = 25;
  sp.missing_rate = 0.2;
  const Matrix s = estimate_covariance(synth_panel(sp, 8));
  EXPECT_GE(min_eigenvalue(s), -1e-10);
  EXPECT_TRUE(is_symmetric(s));
}

TEST(Covariance, InsufficientData) {
  EXPECT_THROW(estimate_covariance(complete_panel(20, 3, 9)), MarketError);
}

TEST(Liquidity, EqualCapsGiveIdentity) {
  ReturnPanel p = complete_panel(5, 4, 1);
  std::fill(p.market_caps.begin(), p.market_caps.end(), 7.0);
  EXPECT_EQ(liquidity_matrix(p), Matrix::identity(4));
}

TEST(Liquidity, FloorAtFivePercent) {
  ReturnPanel p = complete_panel(5, 3, 1);
  p.market_caps = {1.0, 100.0, 100.0};
  EXPECT_DOUBLE_EQ(liquidity_matrix(p)(0, 0), 20.0);
}

TEST(Liquidity, MedianRule) {
  ReturnPanel p = complete_panel(5, 3, 1);
  p.market_caps = {1.0, 2.0, 4.0};
  const Matrix d = liquidity_matrix(p);
  EXPECT_DOUBLE_EQ(d(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(d(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(d(2, 2), 0.5);
}

TEST(Liquidity, MissingCapRejected) {
  ReturnPanel p = complete_panel(5, 3, 1);
  p.market_caps[2] = NAN;
  EXPECT_THROW(liquidity_matrix(p), MarketError);
}

TEST(FactorLoadings, AxisAligned) {
  const Matrix f = factor_loadings(Matrix::diagonal(Vector{4.0, 1.0}), 1);
  EXPECT_NEAR(f(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(f(1, 0), 0.0, 1e-14);
}

TEST(FactorLoadings, RankOneRecoversDirection) {
  const Vector v = {0.3, -1.2, 0.5, 0.1};
  Matrix s(4, 4);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) s(a, b) = v[a] * v[b];
  const Matrix f = factor_loadings(s, 1);
  // Largest-magnitude entry positive: f = -v.
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(f(j, 0), -v[j], 1e-10);
}

TEST(FactorLoadings, SpectralReconstructionBound) {
  SynthPanelParams sp;
  sp.n_tickers = 20;
  const Matrix s = estimate_covariance(synth_panel(sp, 10));
  const auto e = sym_eig(s);
  for (std::size_t k : {1u, 3u, 5u, 10u}) {
    const Matrix f = factor_loadings(s, k);
    const Matrix ffT = matmul(f, transpose(f));
    double tail = 0.0;
    for (std::size_t j = k; j < 20; ++j) tail += std::max(e.values[j], 0.0);
    EXPECT_LE(frobenius(sub(s, ffT)), tail + 1e-12);
  }
  EXPECT_THROW(factor_loadings(s, 21), ContractViolation);
}

TEST(Atoms, IdentityMetricWithCoordinateFactors) {
  const double rho = 1e-3;
  Matrix delta = Matrix::identity(4);
  for (std::size_t j = 0; j < 4; ++j) delta(j, j) = 1.0 - rho;
  Matrix f(4, 2);
  f(0, 0) = 1.0;
  f(1, 1) = 1.0;
  const Atoms at = build_atoms(Matrix(4, 4), delta, 1.0, rho, f);
  EXPECT_LE(max_abs_diff(at.A, f), 1e-14);
  const Vector u = {1.0, 2.0, 3.0, 4.0};
  const Vector r = matvec(at.R_K, u);
  EXPECT_NEAR(r[0], 0.0, 1e-14);
  EXPECT_NEAR(r[1], 0.0, 1e-14);
  EXPECT_NEAR(r[2], 3.0, 1e-14);
  EXPECT_NEAR(r[3], 4.0, 1e-14);
}

TEST(Atoms, IdentitiesOnCalibratedMarket) {
  const MarketModel mm = synthetic_market({}, {}, 11);
  EXPECT_LE(max_abs_diff(matmul_tn(mm.F, mm.A), Matrix::identity(mm.k)), 1e-8);
  EXPECT_LE(max_abs(matmul_tn(mm.F, mm.R_K)), 1e-8);
  EXPECT_GE(min_eigenvalue(mm.Sigma), -1e-10);
  EXPECT_GT(min_eigenvalue(mm.Gamma), 0.0);
  EXPECT_GT(min_eigenvalue(mm.K), 0.0);
  double mean_var = 0.0;
  for (std::size_t j = 0; j < mm.m; ++j) mean_var += mm.Sigma(j, j);
  EXPECT_NEAR(mean_var / mm.m, 1.0, 1e-12);
}

TEST(Atoms, MinimumCostMatchingAgainstGrid) {
  // m = 3, k = 1: minimize 0.5 a^T K a subject to f^T a = eta over the
  // plane a = a0 + s n1 + t n2, refined grid down to 1e-6.
  const Matrix sigma = Matrix::from_rows({{1.0, 0.3, 0.1}, {0.3, 0.8, -0.2}, {0.1, -0.2, 1.5}});
  const Matrix delta = Matrix::diagonal(Vector{1.0, 2.0, 0.5});
  const Matrix f = Matrix::from_rows({{0.9}, {0.4}, {-0.3}});
  const Atoms at = build_atoms(sigma, delta, 1.0, 1e-3, f);
  const double eta = 0.7;
  const Vector a_star = {at.A(0, 0) * eta, at.A(1, 0) * eta, at.A(2, 0) * eta};
  const double obj_star = 0.5 * quad_form(at.K, a_star);

  const Vector fv = f.col(0);
  const Vector a0 = scaled(fv, eta / dot(fv, fv));
  Vector n1 = {-fv[1], fv[0], 0.0};
  n1 = scaled(n1, 1.0 / norm2(n1));
  Vector n2 = {fv[1] * n1[2] - fv[2] * n1[1], fv[2] * n1[0] - fv[0] * n1[2], fv[0] * n1[1] - fv[1] * n1[0]};
  n2 = scaled(n2, 1.0 / norm2(n2));
  double cs = 0.0, ct = 0.0, best = INFINITY;
  for (double h : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const double s0 = cs, t0 = ct;
    for (int i = -200; i <= 200; ++i)
      for (int j = -200; j <= 200; ++j) {
        const double s = s0 + i * h, t = t0 + j * h;
        Vector a = a0;
        axpy(s, n1, a);
        axpy(t, n2, a);
        const double o = 0.5 * quad_form(at.K, a);
        if (o < best) {
          best = o;
          cs = s;
          ct = t;
        }
      }
  }
  EXPECT_NEAR(dot(fv, a_star), eta, 1e-12);
  EXPECT_LE(obj_star, best + 1e-12);
  EXPECT_NEAR(obj_star, best, 1e-6);
}

TEST(Atoms, ResidualProjectionInvariantToColumnRescaling) {
  const MarketModel mm = synthetic_market({}, {}, 12);
  Matrix f2 = mm.F;
  const Vector d = {2.0, 0.5, -3.0, 1.5, 0.25};
  for (std::size_t j = 0; j < mm.m; ++j)
    for (std::size_t c = 0; c < mm.k; ++c) f2(j, c) *= d[c];
  const Atoms at = build_atoms(mm.Sigma, mm.Delta, mm.nu, mm.rho_K, f2);
  EXPECT_LE(max_abs_diff(at.R_K, mm.R_K), 1e-9);
  for (std::size_t j = 0; j < mm.m; ++j)
    for (std::size_t c = 0; c < mm.k; ++c) EXPECT_NEAR(at.A(j, c) * d[c], mm.A(j, c), 1e-9);
}

TEST(Atoms, SingularMetricRejected) {
  const Matrix sigma = Matrix::diagonal(Vector{1e13, 0.0});
  EXPECT_THROW(build_atoms(sigma, Matrix(2, 2), 0.0, 1e-3, Matrix(2, 1, 1.0)), MarketError);
  EXPECT_THROW(build_atoms(sigma, Matrix(2, 2), 0.0, 0.0, Matrix(2, 1, 1.0)), ContractViolation);
}

TEST(ResidualCost, Values) {
  EXPECT_EQ(residual_cost(Vector{0.0, 0.0}, Matrix::identity(2)), 0.0);
  EXPECT_DOUBLE_EQ(residual_cost(Vector{1.0, 1.0}, Matrix::identity(2)), 1.0);
  const double c = 2.5;
  const Vector z = {0.3, -1.1, 0.7};
  EXPECT_EQ(conjugate_cost(z, scaled(Matrix::identity(3), 1.0 / c)), dot(z, z) / (2.0 * c));
}

TEST(ResidualCost, FenchelInequality) {
  const MarketModel mm = synthetic_market({}, {}, 13);
  CounterRng rng(13, {1});
  for (int i = 0; i < 1000; ++i) {
    Vector xi(mm.m), p(mm.m);
    for (auto& x : xi) x = rng.normal();
    for (auto& x : p) x = rng.normal();
    const double lhs = residual_cost(xi, mm.Gamma) + conjugate_cost(scaled(p, -1.0), mm.Gamma_inv);
    EXPECT_GE(lhs, -dot(p, xi) - 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST(MarketJson, RoundTrip) {
  const MarketModel mm = synthetic_market({}, {}, 14, "M0");
  const MarketModel back = market_from_json(market_to_json(mm));
  EXPECT_EQ(back.label, "M0");
  EXPECT_EQ(back.tickers, mm.tickers);
  EXPECT_EQ(back.Sigma, mm.Sigma);
  EXPECT_EQ(back.A, mm.A);
  EXPECT_EQ(back.R_K, mm.R_K);
  EXPECT_EQ(back.Gamma_inv, mm.Gamma_inv);
  EXPECT_THROW(market_from_json("{\"m\": 3}"), MarketError);
}

TEST(CorrelationVariant, Endpoints) {
  const MarketModel mm = synthetic_market({}, {}, 15);
  const Matrix zero = correlation_variant(mm.Sigma, 0.0);
  EXPECT_EQ(zero, Matrix::diagonal(mm.Sigma.diag()));
  EXPECT_EQ(correlation_variant(mm.Sigma, 1.0), mm.Sigma);
  const MarketModel diag = with_correlation(mm, 0.0, {});
  EXPECT_EQ(diag.Sigma, zero);
  EXPECT_LE(max_abs(matmul_tn(diag.F, diag.R_K)), 1e-8);
}

}  // namespace
}  // namespace qcross
