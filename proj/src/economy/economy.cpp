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

#include "qcross/economy/economy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "qcross/numerics/eig.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/qp.hpp"

namespace qcross {

const std::array<ProfileParams, 5>& default_profiles() {
  static const std::array<ProfileParams, 5> table = {{
      {ProfileKind::kIndexer, "Indexer", 2.60, 0.36, 1.30, 0.16},
      {ProfileKind::kActive, "Active", 1.20, 0.20, 1.00, 0.20},
      {ProfileKind::kHedge, "Hedge", 2.10, 0.18, 1.15, 0.22},
      {ProfileKind::kEtf, "ETF", 1.40, 0.30, 1.35, 0.18},
      {ProfileKind::kDealer, "Dealer", 3.00, 0.22, 1.20, 0.22},
  }};
  return table;
}

const ProfileParams& profile_by_name(const std::string& name) {
  for (const auto& p : default_profiles())
    if (p.name == name) return p;
  throw ContractViolation("unknown profile '" + name + "'");
}

Matrix curvature_matrix(double lambda, double gamma, double rho, const MarketModel& market) {
  Matrix h = combine(lambda, market.Sigma, gamma, market.Delta);
  for (std::size_t j = 0; j < market.m; ++j) h(j, j) += rho;
  return symmetrized(h);
}

double value(const Participant& part, std::span<const double> d) {
  return dot(part.theta, d) - 0.5 * quad_form(part.H, d);
}

double complementarity(const Participant& part, std::span<const double> g, std::span<const double> h) {
  const double cross = -dot(g, matvec(part.H, h));
  const Vector gh = add(g, h);
  const double vgh = value(part, gh);
  const double direct = vgh - value(part, g) - value(part, h);
  if (std::abs(direct - cross) > 1e-10 * (1.0 + std::abs(vgh) + std::abs(cross)))
    throw std::logic_error("complementarity: increment identity violated");
  return cross;
}

Participant make_participant(const ProfileParams& profile, const MarketModel& market, double lambda, double gamma,
                             double rho, Vector tau, Vector alpha, std::size_t id) {
  if (lambda < 0.0 || gamma < 0.0 || rho < 0.0) throw ContractViolation("participant: negative curvature weight");
  if (tau.size() != market.m || alpha.size() != market.m) throw ContractViolation("participant: dimension mismatch");
  Participant p;
  p.id = id;
  p.profile = profile;
  p.lambda = lambda;
  p.gamma = gamma;
  p.rho = rho;
  p.feasible = {profile.gross_cap, profile.name_cap};
  p.H = curvature_matrix(lambda, gamma, rho, market);
  p.theta = add(matvec(p.H, tau), alpha);
  p.tau = std::move(tau);
  p.alpha = std::move(alpha);
  return p;
}

namespace {

// k distinct indices out of m by partial Fisher-Yates.
std::vector<std::size_t> sample_names(CounterRng& rng, std::size_t m, std::size_t k) {
  std::vector<std::size_t> idx(m);
  for (std::size_t j = 0; j < m; ++j) idx[j] = j;
  k = std::min(k, m);
  for (std::size_t j = 0; j < k; ++j) std::swap(idx[j], idx[j + rng.index(m - j)]);
  idx.resize(k);
  return idx;
}

}  // namespace

Vector factor_shock(std::size_t k, double zeta_contra, int side_sign, double sigma_z, CounterRng& rng) {
  const double side = side_sign < 0 ? -1.0 : 1.0;
  Vector z(k);
  for (auto& x : z) {
    const double raw = sigma_z * rng.normal();
    x = (1.0 - zeta_contra) * side * std::abs(raw) + zeta_contra * raw;
  }
  return z;
}

Participant draw_participant(const ProfileParams& profile, const MarketModel& market, double zeta_contra,
                             int side_sign, const ShockParams& shocks, CounterRng& rng, std::size_t id) {
  if (!(zeta_contra >= 0.0 && zeta_contra <= 1.0)) throw ContractViolation("draw_participant: zeta in [0, 1]");
  const std::size_t m = market.m;
  const std::size_t k = market.k;
  const double lambda = profile.lambda_bar * rng.uniform(shocks.scale_lo, shocks.scale_hi);
  const double gamma = profile.gamma_bar * rng.uniform(shocks.scale_lo, shocks.scale_hi);

  const Vector z = factor_shock(k, zeta_contra, side_sign, shocks.sigma_z, rng);
  Vector u(m, 0.0);
  for (std::size_t j : sample_names(rng, m, shocks.residual_names)) u[j] = shocks.sigma_u * rng.normal();

  Vector raw_target = matvec(market.R_K, u);
  if (k > 0) raw_target = add(matvec(market.A, z), raw_target);
  const FeasibleSet set{profile.gross_cap, profile.name_cap};
  Vector tau = project_l1_box(raw_target, set);

  Vector alpha(m, 0.0);
  if (profile.kind == ProfileKind::kActive) {
    for (std::size_t j : sample_names(rng, m, shocks.alpha_names)) alpha[j] = shocks.alpha_scale * rng.normal();
  } else if (profile.kind == ProfileKind::kDealer) {
    for (std::size_t j = 0; j < m; ++j) alpha[j] = -shocks.dealer_kappa * market.Delta(j, j) * tau[j];
  }
  return make_participant(profile, market, lambda, gamma, shocks.rho, std::move(tau), std::move(alpha), id);
}

EconomyCell make_cell(std::shared_ptr<const MarketModel> market, const CellParams& params, std::uint64_t seed) {
  if (!market) throw ContractViolation("make_cell: null market");
  std::vector<ProfileParams> table = params.profiles;
  if (table.empty()) table.assign(default_profiles().begin(), default_profiles().end());

  EconomyCell cell;
  cell.market = std::move(market);
  cell.zeta_contra = params.zeta_contra;
  cell.seed = seed;
  CounterRng cell_rng(seed, {0xce11ULL});
  cell.side = cell_rng.uniform() < 0.5 ? -1 : 1;
  for (std::size_t i = 0; i < params.n_participants; ++i) {
    const ProfileParams& prof = i < table.size() ? table[i] : table[cell_rng.index(table.size())];
    CounterRng rng(seed, {0x9a47ULL, i});
    cell.participants.push_back(
        draw_participant(prof, *cell.market, params.zeta_contra, cell.side, params.shocks, rng, i));
  }
  return cell;
}

double welfare(const EconomyCell& cell, const std::vector<Vector>& trades) {
  if (trades.size() != cell.n()) throw ContractViolation("welfare: one trade per participant");
  Vector xi(cell.m(), 0.0);
  double w = 0.0;
  for (std::size_t i = 0; i < trades.size(); ++i) {
    w += value(cell.participants[i], trades[i]);
    axpy(-1.0, trades[i], xi);
  }
  return w - residual_cost(xi, cell.market->Gamma);
}

Allocation make_allocation(const EconomyCell& cell, std::vector<Vector> trades) {
  if (trades.size() != cell.n()) throw ContractViolation("make_allocation: one trade per participant");
  Allocation a;
  a.residual.assign(cell.m(), 0.0);
  a.surpluses.resize(cell.n());
  double total = 0.0;
  for (std::size_t i = 0; i < cell.n(); ++i) {
    if (trades[i].size() != cell.m()) throw ContractViolation("make_allocation: trade dimension");
    a.surpluses[i] = value(cell.participants[i], trades[i]);
    total += a.surpluses[i];
    axpy(-1.0, trades[i], a.residual);
  }
  a.welfare = total - residual_cost(a.residual, cell.market->Gamma);
  a.trades = std::move(trades);
  return a;
}

Allocation no_trade(const EconomyCell& cell) {
  return make_allocation(cell, std::vector<Vector>(cell.n(), Vector(cell.m(), 0.0)));
}

OracleSolution oracle_allocation(const EconomyCell& cell, const OracleOptions& opts) {
  const std::size_t n = cell.n();
  const std::size_t m = cell.m();
  const Matrix& gamma = cell.market->Gamma;

  std::vector<Matrix> block_h(n);
  std::vector<double> block_lip(n);
  for (std::size_t i = 0; i < n; ++i) {
    block_h[i] = symmetrized(add(cell.participants[i].H, gamma));
    block_lip[i] = max_eigenvalue(block_h[i]);
  }

  std::vector<Vector> d(n, Vector(m, 0.0));
  Vector total(m, 0.0);
  double w = 0.0;
  double residual = 0.0;
  std::size_t sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vector others = sub(total, d[i]);
      const Vector price = matvec(gamma, others);
      QpOptions qo;
      qo.tol = 1e-15;
      qo.lipschitz = block_lip[i];
      qo.warm_start = d[i];
      qo.max_iter = 200 * m;
      QpResult r;
      try {
        r = solve_concave_qp(cell.participants[i].theta, block_h[i], price, cell.participants[i].feasible, qo);
      } catch (const ConvergenceError& e) {
        r.x = e.best_iterate();
        r.residual = e.residual();
      }
      residual = std::max(residual, r.residual);
      total = add(others, r.x);
      d[i] = std::move(r.x);
    }
    const double w_new = welfare(cell, d);
    const bool done = sweep > 0 && w_new - w <= opts.tol * (1.0 + std::abs(w_new));
    w = w_new;
    if (done) break;
  }
  if (sweep == opts.max_sweeps) {
    std::vector<double> flat;
    for (const auto& v : d) flat.insert(flat.end(), v.begin(), v.end());
    throw ConvergenceError("oracle_allocation: sweep cap reached", flat, residual);
  }

  OracleSolution sol;
  sol.sweeps = sweep + 1;
  sol.residual = residual;
  if (w < 0.0) {
    sol.allocation = no_trade(cell);
  } else {
    sol.allocation = make_allocation(cell, std::move(d));
  }
  sol.welfare = sol.allocation.welfare;
  return sol;
}

const OracleSolution& ensure_oracle(EconomyCell& cell, const OracleOptions& opts) {
  if (!cell.oracle) cell.oracle = oracle_allocation(cell, opts);
  return *cell.oracle;
}

double efficiency(double w, double w_star) {
  if (!(w_star > kMinOracleWelfare)) return std::numeric_limits<double>::quiet_NaN();
  return w / w_star;
}

std::string cell_to_json(const EconomyCell& cell) {
  nlohmann::json j;
  j["market"] = cell.market->label;
  j["m"] = cell.m();
  j["seed"] = cell.seed;
  j["zeta_contra"] = cell.zeta_contra;
  j["side"] = cell.side;
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : cell.participants) {
    parts.push_back({{"id", p.id},
                     {"profile", p.profile.name},
                     {"lambda", p.lambda},
                     {"gamma", p.gamma},
                     {"rho", p.rho},
                     {"gross_cap", p.feasible.gross_cap},
                     {"name_cap", p.feasible.name_cap},
                     {"tau", p.tau},
                     {"alpha", p.alpha},
                     {"theta", p.theta}});
  }
  j["participants"] = parts;
  if (cell.oracle) {
    j["oracle_welfare"] = cell.oracle->welfare;
    j["oracle_trades"] = cell.oracle->allocation.trades;
  }
  return j.dump();
}

EconomyCell cell_from_json(const std::string& text, std::shared_ptr<const MarketModel> market) {
  const auto j = nlohmann::json::parse(text);
  EconomyCell cell;
  cell.market = std::move(market);
  if (j.at("m").get<std::size_t>() != cell.m()) throw ContractViolation("cell json: market dimension mismatch");
  cell.seed = j.at("seed").get<std::uint64_t>();
  cell.zeta_contra = j.at("zeta_contra").get<double>();
  cell.side = j.at("side").get<int>();
  for (const auto& pj : j.at("participants")) {
    ProfileParams prof = profile_by_name(pj.at("profile").get<std::string>());
    prof.gross_cap = pj.at("gross_cap").get<double>();
    prof.name_cap = pj.at("name_cap").get<double>();
    Participant p = make_participant(prof, *cell.market, pj.at("lambda").get<double>(), pj.at("gamma").get<double>(),
                                     pj.at("rho").get<double>(), pj.at("tau").get<Vector>(),
                                     pj.at("alpha").get<Vector>(), pj.at("id").get<std::size_t>());
    p.theta = pj.at("theta").get<Vector>();
    cell.participants.push_back(std::move(p));
  }
  if (j.contains("oracle_trades")) {
    OracleSolution sol;
    sol.allocation = make_allocation(cell, j.at("oracle_trades").get<std::vector<Vector>>());
    sol.welfare = sol.allocation.welfare;
    cell.oracle = std::move(sol);
  }
  return cell;
}

}  // namespace qcross
