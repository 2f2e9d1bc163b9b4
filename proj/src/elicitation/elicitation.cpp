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

#include "qcross/elicitation/elicitation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/format.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/nnls.hpp"
#include "qcross/numerics/projection.hpp"
#include "qcross/numerics/qp.hpp"

namespace qcross {

const char* to_string(ValueTag tag) {
  switch (tag) {
    case ValueTag::kNoTrade: return "no_trade";
    case ValueTag::kBridge: return "bridge";
    case ValueTag::kModelGuided: return "model_guided";
    case ValueTag::kProbe: return "probe";
  }
  return "unknown";
}

ReportSet::ReportSet(std::size_t n, std::size_t m) : m_(m), parts_(n) {
  for (std::size_t i = 0; i < n; ++i) parts_[i].vq.push_back({i, 0, Vector(m, 0.0), 0.0, ValueTag::kNoTrade});
}

void ReportSet::add(DemandReport r) {
  if (r.trade.size() != m_ || r.price.size() != m_) throw ContractViolation("ReportSet: package dimension");
  parts_.at(r.participant).dq.push_back(std::move(r));
}

void ReportSet::add(ValueReport r) {
  if (r.package.size() != m_) throw ContractViolation("ReportSet: package dimension");
  parts_.at(r.participant).vq.push_back(std::move(r));
}

std::size_t ReportSet::queries(std::size_t i) const {
  const auto& p = parts_.at(i);
  std::size_t n = p.dq.size();
  for (const auto& v : p.vq) n += v.tag != ValueTag::kNoTrade;
  return n;
}

double dq_lower_bound(std::span<const double> price, std::span<const double> trade, double rho_dq) {
  const double pd = dot(price, trade);
  return pd >= 0.0 ? rho_dq * pd : pd;
}

DemandReport demand_query(const Participant& part, std::span<const double> price, const ResponseMode& mode,
                          CounterRng& rng, double rho_dq, std::size_t round) {
  if (price.size() != part.theta.size()) throw ContractViolation("demand_query: price dimension");
  DemandReport r;
  r.participant = part.id;
  r.round = round;
  r.price.assign(price.begin(), price.end());
  switch (mode.kind) {
    case ResponseMode::Kind::kExact:
      r.trade = solve_concave_qp(part.theta, part.H, price, part.feasible).x;
      break;
    case ResponseMode::Kind::kStochastic: {
      Vector d = solve_concave_qp(part.theta, part.H, price, part.feasible).x;
      if (mode.sigma > 0.0) {
        for (auto& x : d) x += mode.sigma * rng.normal();
        d = project_l1_box(d, part.feasible);
      }
      r.trade = std::move(d);
      break;
    }
    case ResponseMode::Kind::kRegularized: {
      Matrix h = part.H;
      for (std::size_t j = 0; j < h.rows(); ++j) h(j, j) += mode.mu;
      r.trade = solve_concave_qp(part.theta, h, price, part.feasible).x;
      break;
    }
  }
  r.lower_bound = dq_lower_bound(r.price, r.trade, rho_dq);
  return r;
}

ValueReport value_query(const Participant& part, std::span<const double> package, ValueTag tag, std::size_t round) {
  return {part.id, round, Vector(package.begin(), package.end()), value(part, package), tag};
}

std::vector<ValueReport> bridge_query(const EconomyCell& cell, const std::vector<Vector>& a_dq, std::size_t round) {
  if (a_dq.size() != cell.n()) throw ContractViolation("bridge_query: one package per participant");
  std::vector<ValueReport> out;
  out.reserve(cell.n());
  for (std::size_t i = 0; i < cell.n(); ++i)
    out.push_back(value_query(cell.participants[i], a_dq[i], ValueTag::kBridge, round));
  return out;
}

Vector PriceBasis::prices() const {
  if (columns.cols() == 0) return Vector(columns.rows(), 0.0);
  return matvec(columns, kappa);
}

namespace {

// Component of v orthogonal to the columns (modified Gram-Schmidt against
// an orthonormalized copy).
Vector orthogonal_residual(const Matrix& cols, Vector v) {
  const std::size_t r = cols.cols();
  std::vector<Vector> q;
  for (std::size_t c = 0; c < r; ++c) {
    Vector x = cols.col(c);
    for (const auto& b : q) axpy(-dot(b, x), b, x);
    const double nx = norm2(x);
    if (nx > 1e-300) q.push_back(scaled(x, 1.0 / nx));
  }
  for (const auto& b : q) axpy(-dot(b, v), b, v);
  return v;
}

bool try_append(Matrix& cols, const Vector& v) {
  const double nv = norm2(v);
  if (!(nv > 0.0)) return false;
  if (norm2(orthogonal_residual(cols, v)) <= 1e-10 * nv) return false;
  Matrix out(cols.rows(), cols.cols() + 1);
  for (std::size_t i = 0; i < cols.rows(); ++i) {
    for (std::size_t c = 0; c < cols.cols(); ++c) out(i, c) = cols(i, c);
    out(i, cols.cols()) = v[i];
  }
  cols = std::move(out);
  return true;
}

}  // namespace

PriceBasis initial_basis(const MarketModel& market) {
  PriceBasis b;
  b.columns = Matrix(market.m, 0);
  for (std::size_t c = 0; c < market.k; ++c)
    if (try_append(b.columns, market.F.col(c))) ++b.n_factor;
  Vector g(market.m);
  for (std::size_t j = 0; j < market.m; ++j) g[j] = 1.0 / std::sqrt(market.liquidity[j]);
  g = scaled(g, 1.0 / norm2(g));
  b.has_liquidity = try_append(b.columns, g);
  b.kappa.assign(b.columns.cols(), 0.0);
  return b;
}

void extend_basis(PriceBasis& basis, std::span<const std::size_t> names) {
  for (std::size_t j : names) {
    if (std::find(basis.names.begin(), basis.names.end(), j) != basis.names.end()) continue;
    Vector e(basis.columns.rows(), 0.0);
    e.at(j) = 1.0;
    if (try_append(basis.columns, e)) {
      basis.names.push_back(j);
      basis.kappa.push_back(0.0);
    }
  }
}

PriceBasis price_update(const PriceBasis& basis, std::span<const double> total_predicted_demand,
                        const Matrix& gamma_inv, double step) {
  if (!(step > 0.0)) throw ContractViolation("price_update: step must be positive");
  PriceBasis out = basis;
  if (basis.rank() == 0) return out;
  const Vector p = basis.prices();
  const Vector excess = sub(total_predicted_demand, matvec(gamma_inv, p));
  const Vector g = matvec_t(basis.columns, excess);
  axpy(step, g, out.kappa);
  return out;
}

std::vector<std::size_t> active_names(const ParticipantReports& reports, std::size_t s, double eps) {
  if (s == 0) throw ContractViolation("active_names: s must be positive");
  std::size_t m = 0;
  if (!reports.dq.empty()) m = reports.dq.front().trade.size();
  if (!reports.vq.empty()) m = reports.vq.front().package.size();
  Vector score(m, 0.0);
  for (const auto& r : reports.dq)
    for (std::size_t j = 0; j < m; ++j) score[j] += std::abs(r.trade[j]);
  for (const auto& r : reports.vq)
    for (std::size_t j = 0; j < m; ++j) score[j] += std::abs(r.package[j]);
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < m; ++j)
    if (score[j] > eps) idx.push_back(j);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  if (idx.size() > s) idx.resize(s);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SurrogateParams SurrogateParams::prior(std::size_t m) {
  SurrogateParams s;
  s.beta.assign(m, 0.0);
  return s;
}

Matrix tangent_projector(std::span<const double> d, const FeasibleSet& set, double tol) {
  const std::size_t m = d.size();
  const bool l1_tight = norm1(d) >= set.gross_cap - tol;
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < m; ++j) {
    const double a = std::abs(d[j]);
    if (a >= set.name_cap - tol) continue;
    if (l1_tight && a <= tol) continue;
    free.push_back(j);
  }
  Matrix p(m, m);
  for (std::size_t j : free) p(j, j) = 1.0;
  if (l1_tight && !free.empty()) {
    const double inv = 1.0 / static_cast<double>(free.size());
    for (std::size_t a : free)
      for (std::size_t b : free) p(a, b) -= (d[a] < 0 ? -1.0 : 1.0) * (d[b] < 0 ? -1.0 : 1.0) * inv;
  }
  return p;
}

Matrix surrogate_curvature(const SurrogateParams& s, const Matrix& sigma, const Matrix& delta) {
  Matrix h = combine(s.lambda, sigma, s.gamma, delta);
  for (std::size_t j = 0; j < h.rows(); ++j) h(j, j) += s.rho;
  return symmetrized(h);
}

double surrogate_value(const SurrogateParams& s, const Matrix& sigma, const Matrix& delta,
                       std::span<const double> d) {
  return dot(s.beta, d) - 0.5 * (s.lambda * quad_form(sigma, d) + s.gamma * quad_form(delta, d) + s.rho * dot(d, d));
}

Vector surrogate_demand(const SurrogateParams& s, const Matrix& curvature, std::span<const double> price,
                        const FeasibleSet& set) {
  QpOptions qo;
  try {
    return solve_concave_qp(s.beta, curvature, price, set, qo).x;
  } catch (const ConvergenceError& e) {
    return e.best_iterate();
  }
}

SurrogateParams fit_surrogate(const ParticipantReports& reports, const FeasibleSet& set, const Matrix& sigma,
                              const Matrix& delta, const SurrogateOptions& opts) {
  const std::size_t m = sigma.rows();
  const std::size_t n = m + 3;
  std::vector<double> rows;
  Vector target;
  auto push_row = [&](const Vector& row, double t) {
    if (norm_inf(row) == 0.0) return;
    rows.insert(rows.end(), row.begin(), row.end());
    target.push_back(t);
  };

  if (opts.use_dq) {
    for (const auto& r : reports.dq) {
      const Matrix p = tangent_projector(r.trade, set, opts.active_tol);
      if (max_abs(p) == 0.0) continue;
      const Vector ps = matvec(p, matvec(sigma, r.trade));
      const Vector pd = matvec(p, matvec(delta, r.trade));
      const Vector pt = matvec(p, r.trade);
      const Vector pp = matvec(p, r.price);
      Vector row(n);
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) row[b] = p(a, b);
        row[m] = -ps[a];
        row[m + 1] = -pd[a];
        row[m + 2] = -pt[a];
        push_row(row, pp[a]);
      }
    }
  }
  if (opts.use_vq) {
    const double w = std::sqrt(opts.w_vq);
    for (const auto& r : reports.vq) {
      const auto& q = r.package;
      Vector row(n);
      for (std::size_t b = 0; b < m; ++b) row[b] = w * q[b];
      row[m] = -0.5 * w * quad_form(sigma, q);
      row[m + 1] = -0.5 * w * quad_form(delta, q);
      row[m + 2] = -0.5 * w * dot(q, q);
      push_row(row, w * r.value);
    }
  }
  if (target.empty()) {
    SurrogateParams s = SurrogateParams::prior(m);
    s.degenerate = true;
    return s;
  }

  // Ridge rows centered on the prior: a zero-centered ridge fits any data
  // gathered at zero prices exactly with all-zero parameters.
  const SurrogateParams center = SurrogateParams::prior(m);
  const double r = std::sqrt(opts.w_reg);
  if (r > 0.0) {
    for (std::size_t a = 0; a < n; ++a) {
      Vector row(n, 0.0);
      row[a] = r;
      const double c = a < m ? center.beta[a] : (a == m ? center.lambda : (a == m + 1 ? center.gamma : center.rho));
      rows.insert(rows.end(), row.begin(), row.end());
      target.push_back(r * c);
    }
  }
  Matrix design(target.size(), n);
  std::copy(rows.begin(), rows.end(), design.data().begin());
  std::vector<bool> nonneg(n, false);
  nonneg[m] = nonneg[m + 1] = nonneg[m + 2] = true;
  Vector x;
  try {
    x = nnls_ridge(design, target, nonneg, 0.0);
  } catch (const ConvergenceError& e) {
    x = e.best_iterate();
  }
  SurrogateParams s;
  s.beta.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
  s.lambda = std::max(x[m], 0.0);
  s.gamma = std::max(x[m + 1], 0.0);
  s.rho = std::max(x[m + 2], 0.0);
  return s;
}

void TraceLog::record(const DemandReport& r) {
  if (!enabled_) return;
  text_ += "{" + context_ + "\"type\":\"dq\",\"participant\":" + std::to_string(r.participant) +
           ",\"round\":" + std::to_string(r.round) + ",\"price\":" + fmt_json_array(r.price, kTraceDigits) +
           ",\"trade\":" + fmt_json_array(r.trade, kTraceDigits) +
           ",\"lower_bound\":" + fmt_sig(r.lower_bound, kTraceDigits) + "}\n";
}

void TraceLog::record(const ValueReport& r) {
  if (!enabled_) return;
  text_ += "{" + context_ + "\"type\":\"vq\",\"participant\":" + std::to_string(r.participant) +
           ",\"round\":" + std::to_string(r.round) + ",\"tag\":\"" + to_string(r.tag) +
           "\",\"package\":" + fmt_json_array(r.package, kTraceDigits) +
           ",\"value\":" + fmt_sig(r.value, kTraceDigits) + "}\n";
}

void TraceLog::record_event(const std::string& kind, const std::string& detail) {
  if (!enabled_) return;
  text_ += "{" + context_ + "\"type\":\"" + kind + "\",\"detail\":" + detail + "}\n";
}

}  // namespace qcross
