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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qcross/market/panel.hpp"
#include "qcross/numerics/matrix.hpp"

namespace qcross {

/// Fixed market environment shared by every participant of a cell.
/// Immutable after construction.
struct MarketModel {
  std::string label;
  std::vector<std::string> tickers;
  std::size_t m = 0;
  std::size_t k = 0;
  Matrix Sigma;      ///< return covariance, PSD
  Matrix Delta;      ///< diagonal liquidity curvature
  Vector liquidity;  ///< l_j, Delta_jj = 1 / l_j
  Matrix F;          ///< m x k loadings
  Matrix Gamma;      ///< residual execution cost, PD
  Matrix Gamma_inv;
  Matrix K;          ///< Sigma + nu Delta + rho_K I
  Matrix A;          ///< K^-1 F (F^T K^-1 F)^-1
  Matrix R_K;        ///< I - A F^T
  double nu = 1.0;
  double rho_K = 1e-3;
  double gamma_res = 0.5;
};

struct MarketParams {
  std::size_t k = 5;
  double nu = 1.0;
  double rho_K = 1e-3;
  double gamma_res = 0.5;        ///< Gamma = gamma_res * Delta
  double winsor_q = 0.01;
  double shrink = 0.10;
  double coverage = 0.80;
  std::size_t top_m = 20;
  bool normalize_sigma = true;   ///< rescale Sigma to unit mean variance
  double correlation_alpha = 1.0;
};

class MarketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Winsorized pairwise-deletion covariance, shrunk toward its diagonal and
/// projected to the PSD cone. Needs >= 30 common rows for every pair.
Matrix estimate_covariance(const ReturnPanel& panel, double winsor_q = 0.01, double shrink = 0.10);

/// l_j = cap_j / median(cap) floored at 0.05.
Vector liquidity_levels(const ReturnPanel& panel);
/// Delta = diag(1 / l_j).
Matrix liquidity_matrix(const ReturnPanel& panel);

/// Top-k eigenvectors scaled by sqrt(eigenvalue); each column's
/// largest-magnitude entry is made positive.
Matrix factor_loadings(const Matrix& sigma, std::size_t k);

struct Atoms {
  Matrix K;
  Matrix A;
  Matrix R_K;
};

/// Throws MarketError if cond(K) > 1e12 or the atom identities fail.
Atoms build_atoms(const Matrix& sigma, const Matrix& delta, double nu, double rho_K, const Matrix& f);

/// (1 - alpha) diag(Sigma) + alpha Sigma
Matrix correlation_variant(const Matrix& sigma, double alpha);

double residual_cost(std::span<const double> xi, const Matrix& gamma);
/// Conjugate 0.5 z^T Gamma^-1 z, given Gamma^-1.
double conjugate_cost(std::span<const double> z, const Matrix& gamma_inv);

/// Builds every derived matrix from Sigma and liquidity levels.
MarketModel assemble_market(Matrix sigma, Vector liquidity, const MarketParams& params,
                            std::string label = {}, std::vector<std::string> tickers = {});

/// Screen, estimate, assemble.
MarketModel calibrate_market(const ReturnPanel& panel, const MarketParams& params, std::string label = {});

/// Synthetic market from synth_panel with the given seed.
MarketModel synthetic_market(const SynthPanelParams& panel_params, const MarketParams& params,
                             std::uint64_t seed, std::string label = {});

/// Same market with a different correlation regime (rebuilds K, A, R_K, F).
MarketModel with_correlation(const MarketModel& base, double alpha, const MarketParams& params);

std::string market_to_json(const MarketModel& model);
MarketModel market_from_json(const std::string& text);
void save_market(const MarketModel& model, const std::filesystem::path& path);
MarketModel load_market(const std::filesystem::path& path);

}  // namespace qcross
