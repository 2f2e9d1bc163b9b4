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

#include "qcross/market/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qcross/numerics/eig.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"

namespace qcross {

namespace {

constexpr std::size_t kMinRows = 30;
constexpr double kLiquidityFloor = 0.05;
constexpr double kMaxCondition = 1e12;

// Type-7 (linear interpolation) sample quantile of a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json matrix_json(const Matrix& a) {
  return {{"rows", a.rows()}, {"cols", a.cols()},
          {"data", std::vector<double>(a.data().begin(), a.data().end())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw MarketError("market json: matrix data length mismatch");
  Matrix a(rows, cols);
  std::copy(data.begin(), data.end(), a.data().begin());
  return a;
}

}  // namespace

Matrix estimate_covariance(const ReturnPanel& panel, double winsor_q, double shrink) {
  if (!(winsor_q >= 0.0 && winsor_q < 0.5)) throw ContractViolation("estimate_covariance: winsor_q in [0, 0.5)");
  if (!(shrink >= 0.0 && shrink <= 1.0)) throw ContractViolation("estimate_covariance: shrink in [0, 1]");
  const std::size_t t = panel.n_dates();
  const std::size_t m = panel.n_tickers();

  Matrix r = panel.returns;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> col;
    for (std::size_t i = 0; i < t; ++i)
      if (!ReturnPanel::missing(r(i, j))) col.push_back(r(i, j));
    if (col.size() < kMinRows)
      throw MarketError("estimate_covariance: ticker " + panel.tickers[j] + " has " +
                        std::to_string(col.size()) + " observations, need " + std::to_string(kMinRows));
    std::sort(col.begin(), col.end());
    const double lo = quantile_sorted(col, winsor_q);
    const double hi = quantile_sorted(col, 1.0 - winsor_q);
    // Shift by the median so constant columns stay exactly zero after centering.
    const double shift = quantile_sorted(col, 0.5);
    for (std::size_t i = 0; i < t; ++i)
      if (!ReturnPanel::missing(r(i, j))) r(i, j) = std::clamp(r(i, j), lo, hi) - shift;
  }

  Matrix s(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      double sa = 0.0, sb = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < t; ++i) {
        if (ReturnPanel::missing(r(i, a)) || ReturnPanel::missing(r(i, b))) continue;
        sa += r(i, a);
        sb += r(i, b);
        ++n;
      }
      if (n < kMinRows)
        throw MarketError("estimate_covariance: pair (" + panel.tickers[a] + ", " + panel.tickers[b] + ") has " +
                          std::to_string(n) + " common rows, need " + std::to_string(kMinRows));
      const double ma = sa / static_cast<double>(n);
      const double mb = sb / static_cast<double>(n);
      double c = 0.0;
      for (std::size_t i = 0; i < t; ++i) {
        if (ReturnPanel::missing(r(i, a)) || ReturnPanel::missing(r(i, b))) continue;
        c += (r(i, a) - ma) * (r(i, b) - mb);
      }
      c /= static_cast<double>(n - 1);
      s(a, b) = c;
      s(b, a) = c;
    }
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (a != b) s(a, b) *= 1.0 - shrink;
  return psd_project(s, 0.0);
}

Vector liquidity_levels(const ReturnPanel& panel) {
  for (std::size_t j = 0; j < panel.n_tickers(); ++j)
    if (std::isnan(panel.market_caps[j]) || panel.market_caps[j] <= 0.0)
      throw MarketError("liquidity_matrix: missing market cap for " + panel.tickers[j]);
  const double med = median(panel.market_caps);
  Vector ell(panel.n_tickers());
  for (std::size_t j = 0; j < ell.size(); ++j) ell[j] = std::max(panel.market_caps[j] / med, kLiquidityFloor);
  return ell;
}

Matrix liquidity_matrix(const ReturnPanel& panel) {
  const Vector ell = liquidity_levels(panel);
  Vector inv(ell.size());
  for (std::size_t j = 0; j < ell.size(); ++j) inv[j] = 1.0 / ell[j];
  return Matrix::diagonal(inv);
}

Matrix factor_loadings(const Matrix& sigma, std::size_t k) {
  const std::size_t m = sigma.rows();
  if (k > m) throw ContractViolation("factor_loadings: k > m");
  require_symmetric(sigma, "factor_loadings");
  const EigenDecomposition e = sym_eig(sigma);
  Matrix f(m, k);
  for (std::size_t c = 0; c < k; ++c) {
    const double scale = std::sqrt(std::max(e.values[c], 0.0));
    std::size_t arg = 0;
    for (std::size_t j = 1; j < m; ++j)
      if (std::abs(e.vectors(j, c)) > std::abs(e.vectors(arg, c)) + 1e-14) arg = j;
    const double sign = e.vectors(arg, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < m; ++j) f(j, c) = sign * scale * e.vectors(j, c);
  }
  return f;
}

Atoms build_atoms(const Matrix& sigma, const Matrix& delta, double nu, double rho_K, const Matrix& f) {
  if (!(rho_K > 0.0)) throw ContractViolation("build_atoms: rho_K must be positive");
  if (nu < 0.0) throw ContractViolation("build_atoms: nu must be nonnegative");
  const std::size_t m = sigma.rows();
  if (delta.rows() != m || f.rows() != m) throw ContractViolation("build_atoms: dimension mismatch");
  const std::size_t k = f.cols();

  Atoms out;
  out.K = combine(1.0, sigma, nu, delta);
  for (std::size_t j = 0; j < m; ++j) out.K(j, j) += rho_K;
  out.K = symmetrized(out.K);
  const EigenDecomposition e = sym_eig(out.K);
  const double lo = e.values.back();
  const double hi = e.values.front();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw MarketError("build_atoms: completion metric K is numerically singular (condition " +
                      std::to_string(lo > 0.0 ? hi / lo : INFINITY) + ")");

  const Matrix chol = cholesky(out.K);
  const Matrix kinv_f = cholesky_solve(chol, f);
  if (k > 0) {
    const Matrix gram = symmetrized(matmul_tn(f, kinv_f));
    const Matrix gram_inv = inverse_spd(gram);
    out.A = matmul(kinv_f, gram_inv);
  } else {
    out.A = Matrix(m, 0);
  }
  out.R_K = Matrix::identity(m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t c = 0; c < k; ++c) out.R_K(a, b) -= out.A(a, c) * f(b, c);

  const double f_scale = std::max(1.0, max_abs(f));
  const Matrix fta = matmul_tn(f, out.A);
  if (max_abs_diff(fta, Matrix::identity(k)) > 1e-8)
    throw MarketError("build_atoms: F^T A deviates from identity");
  if (max_abs(matmul_tn(f, out.R_K)) > 1e-8 * f_scale)
    throw MarketError("build_atoms: F^T R_K deviates from zero");
  return out;
}

Matrix correlation_variant(const Matrix& sigma, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractViolation("correlation_variant: alpha in [0, 1]");
  Matrix out = sigma;
  for (std::size_t a = 0; a < sigma.rows(); ++a)
    for (std::size_t b = 0; b < sigma.cols(); ++b)
      if (a != b) out(a, b) *= alpha;
  return out;
}

double residual_cost(std::span<const double> xi, const Matrix& gamma) { return 0.5 * quad_form(gamma, xi); }

double conjugate_cost(std::span<const double> z, const Matrix& gamma_inv) { return 0.5 * quad_form(gamma_inv, z); }

MarketModel assemble_market(Matrix sigma, Vector liquidity, const MarketParams& params, std::string label,
                            std::vector<std::string> tickers) {
  const std::size_t m = sigma.rows();
  if (liquidity.size() != m) throw ContractViolation("assemble_market: liquidity length != m");
  if (params.k > m) throw ContractViolation("assemble_market: k > m");
  if (!(params.gamma_res > 0.0)) throw ContractViolation("assemble_market: gamma_res must be positive");
  sigma = symmetrized(sigma);
  if (params.normalize_sigma) {
    double mean_var = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean_var += sigma(j, j);
    mean_var /= static_cast<double>(m);
    if (mean_var > 0.0) sigma = scaled(sigma, 1.0 / mean_var);
  }
  if (params.correlation_alpha != 1.0) sigma = correlation_variant(sigma, params.correlation_alpha);

  MarketModel mm;
  mm.label = std::move(label);
  if (tickers.empty()) {
    for (std::size_t j = 0; j < m; ++j) tickers.push_back("N" + std::to_string(j));
  }
  mm.tickers = std::move(tickers);
  mm.m = m;
  mm.k = params.k;
  mm.Sigma = std::move(sigma);
  mm.liquidity = std::move(liquidity);
  Vector inv(m);
  for (std::size_t j = 0; j < m; ++j) inv[j] = 1.0 / mm.liquidity[j];
  mm.Delta = Matrix::diagonal(inv);
  mm.F = factor_loadings(mm.Sigma, params.k);
  mm.Gamma = scaled(mm.Delta, params.gamma_res);
  Vector ginv(m);
  for (std::size_t j = 0; j < m; ++j) ginv[j] = 1.0 / mm.Gamma(j, j);
  mm.Gamma_inv = Matrix::diagonal(ginv);
  mm.nu = params.nu;
  mm.rho_K = params.rho_K;
  mm.gamma_res = params.gamma_res;
  Atoms atoms = build_atoms(mm.Sigma, mm.Delta, mm.nu, mm.rho_K, mm.F);
  mm.K = std::move(atoms.K);
  mm.A = std::move(atoms.A);
  mm.R_K = std::move(atoms.R_K);
  return mm;
}

MarketModel calibrate_market(const ReturnPanel& panel, const MarketParams& params, std::string label) {
  const ReturnPanel screened = screen_universe(panel, params.coverage, params.top_m);
  Matrix sigma = estimate_covariance(screened, params.winsor_q, params.shrink);
  Vector ell = liquidity_levels(screened);
  return assemble_market(std::move(sigma), std::move(ell), params, std::move(label), screened.tickers);
}

MarketModel synthetic_market(const SynthPanelParams& panel_params, const MarketParams& params,
                             std::uint64_t seed, std::string label) {
  return calibrate_market(synth_panel(panel_params, seed), params, std::move(label));
}

MarketModel with_correlation(const MarketModel& base, double alpha, const MarketParams& params) {
  MarketParams p = params;
  p.normalize_sigma = false;
  p.correlation_alpha = alpha;
  p.k = base.k;
  p.nu = base.nu;
  p.rho_K = base.rho_K;
  p.gamma_res = base.gamma_res;
  return assemble_market(base.Sigma, base.liquidity, p, base.label, base.tickers);
}

std::string market_to_json(const MarketModel& mm) {
  nlohmann::json j;
  j["label"] = mm.label;
  j["tickers"] = mm.tickers;
  j["m"] = mm.m;
  j["k"] = mm.k;
  j["nu"] = mm.nu;
  j["rho_K"] = mm.rho_K;
  j["gamma_res"] = mm.gamma_res;
  j["liquidity"] = mm.liquidity;
  j["Sigma"] = matrix_json(mm.Sigma);
  j["Delta"] = matrix_json(mm.Delta);
  j["F"] = matrix_json(mm.F);
  j["Gamma"] = matrix_json(mm.Gamma);
  j["Gamma_inv"] = matrix_json(mm.Gamma_inv);
  j["K"] = matrix_json(mm.K);
  j["A"] = matrix_json(mm.A);
  j["R_K"] = matrix_json(mm.R_K);
  return j.dump(1);
}

MarketModel market_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MarketError(std::string("market json: ") + e.what());
  }
  MarketModel mm;
  try {
    mm.label = j.value("label", std::string{});
    mm.tickers = j.at("tickers").get<std::vector<std::string>>();
    mm.m = j.at("m").get<std::size_t>();
    mm.k = j.at("k").get<std::size_t>();
    mm.nu = j.at("nu").get<double>();
    mm.rho_K = j.at("rho_K").get<double>();
    mm.gamma_res = j.value("gamma_res", 0.5);
    mm.liquidity = j.at("liquidity").get<std::vector<double>>();
    mm.Sigma = matrix_from_json(j.at("Sigma"));
    mm.Delta = matrix_from_json(j.at("Delta"));
    mm.F = matrix_from_json(j.at("F"));
    mm.Gamma = matrix_from_json(j.at("Gamma"));
    mm.Gamma_inv = matrix_from_json(j.at("Gamma_inv"));
    mm.K = matrix_from_json(j.at("K"));
    mm.A = matrix_from_json(j.at("A"));
    mm.R_K = matrix_from_json(j.at("R_K"));
  } catch (const nlohmann::json::exception& e) {
    throw MarketError(std::string("market json: ") + e.what());
  }
  const std::size_t m = mm.m;
  if (mm.Sigma.rows() != m || mm.F.rows() != m || mm.F.cols() != mm.k || mm.A.cols() != mm.k ||
      mm.R_K.rows() != m || mm.liquidity.size() != m)
    throw MarketError("market json: inconsistent dimensions");
  return mm;
}

void save_market(const MarketModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MarketError("cannot write " + path.string());
  out << market_to_json(model) << '\n';
}

MarketModel load_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MarketError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return market_from_json(ss.str());
}

}  // namespace qcross
