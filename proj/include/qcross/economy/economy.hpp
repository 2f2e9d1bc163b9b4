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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcross/market/market_model.hpp"
#include "qcross/numerics/matrix.hpp"
#include "qcross/numerics/projection.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {

enum class ProfileKind { kIndexer, kActive, kHedge, kEtf, kDealer };

struct ProfileParams {
  ProfileKind kind = ProfileKind::kIndexer;
  std::string name;
  double lambda_bar = 0.0;
  double gamma_bar = 0.0;
  double gross_cap = 0.0;
  double name_cap = 0.0;
};

/// Indexer, Active, Hedge, ETF, Dealer.
const std::array<ProfileParams, 5>& default_profiles();
const ProfileParams& profile_by_name(const std::string& name);

struct ShockParams {
  double sigma_z = 0.6;          ///< factor shock scale
  double sigma_u = 0.4;          ///< residual name shock scale
  std::size_t residual_names = 3;
  double alpha_scale = 0.8;      ///< Active sparse alpha
  std::size_t alpha_names = 3;
  double dealer_kappa = 1.5;     ///< Dealer inventory pressure -kappa Delta tau
  double rho = 0.05;             ///< mandate curvature
  double scale_lo = 0.8;         ///< lambda, gamma multiplier range
  double scale_hi = 1.2;
};

struct Participant {
  std::size_t id = 0;
  ProfileParams profile;
  double lambda = 0.0;
  double gamma = 0.0;
  double rho = 0.0;
  Vector tau;
  Vector alpha;
  Vector theta;
  FeasibleSet feasible;
  Matrix H;  ///< lambda Sigma + gamma Delta + rho I
};

Matrix curvature_matrix(double lambda, double gamma, double rho, const MarketModel& market);

/// theta^T d - 0.5 d^T H d
double value(const Participant& part, std::span<const double> d);

/// -g^T H h, checked against v(g + h) - v(g) - v(h) to 1e-10 relative.
double complementarity(const Participant& part, std::span<const double> g, std::span<const double> h);

/// z = (1 - zeta) side |z_raw| + zeta z_raw componentwise, z_raw ~ N(0, sigma_z^2 I).
Vector factor_shock(std::size_t k, double zeta_contra, int side_sign, double sigma_z, CounterRng& rng);

Participant draw_participant(const ProfileParams& profile, const MarketModel& market, double zeta_contra,
                             int side_sign, const ShockParams& shocks, CounterRng& rng, std::size_t id = 0);

/// Participant with explicit primitives (tests and fixtures).
Participant make_participant(const ProfileParams& profile, const MarketModel& market, double lambda, double gamma,
                             double rho, Vector tau, Vector alpha, std::size_t id = 0);

struct Allocation {
  std::vector<Vector> trades;
  Vector residual;     ///< -sum of trades
  double welfare = 0.0;
  Vector surpluses;    ///< v_i(q_i)
};

struct OracleSolution {
  Allocation allocation;
  double welfare = 0.0;
  std::size_t sweeps = 0;
  double residual = 0.0;  ///< max block gradient-mapping norm at exit
};

struct CellParams {
  std::size_t n_participants = 8;
  double zeta_contra = 0.5;
  ShockParams shocks;
  std::vector<ProfileParams> profiles;  ///< empty selects the default table
};

/// One matched economy. The market is shared read-only across cells.
struct EconomyCell {
  std::shared_ptr<const MarketModel> market;
  std::vector<Participant> participants;
  double zeta_contra = 0.5;
  int side = 1;
  std::uint64_t seed = 0;
  std::optional<OracleSolution> oracle;

  std::size_t n() const { return participants.size(); }
  std::size_t m() const { return market->m; }
};

/// Profiles: the first five cycle the table, the rest are uniform draws.
/// The cell side is a fair coin; every factor shock leans toward it with
/// weight (1 - zeta).
EconomyCell make_cell(std::shared_ptr<const MarketModel> market, const CellParams& params, std::uint64_t seed);

Allocation make_allocation(const EconomyCell& cell, std::vector<Vector> trades);
Allocation no_trade(const EconomyCell& cell);
double welfare(const EconomyCell& cell, const std::vector<Vector>& trades);

struct OracleOptions {
  double tol = 1e-13;        ///< relative joint-objective improvement per sweep
  std::size_t max_sweeps = 5000;
};

/// Cyclic block-coordinate ascent on the joint concave program; each block
/// is an exact concave QP with curvature H_i + Gamma. Never below no-trade.
OracleSolution oracle_allocation(const EconomyCell& cell, const OracleOptions& opts = {});

/// Computes and caches the oracle.
const OracleSolution& ensure_oracle(EconomyCell& cell, const OracleOptions& opts = {});

inline constexpr double kMinOracleWelfare = 1e-10;

/// W / W*, NaN when W* <= 1e-10 (cell excluded from ratio aggregation).
double efficiency(double w, double w_star);

std::string cell_to_json(const EconomyCell& cell);
EconomyCell cell_from_json(const std::string& text, std::shared_ptr<const MarketModel> market);

}  // namespace qcross
