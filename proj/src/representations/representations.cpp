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

#include "qcross/representations/representations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcross/numerics/eig.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/qp.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {

const char* to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kSL: return "SL";
    case FamilyKind::kFC: return "FC";
    case FamilyKind::kNC: return "NC";
    case FamilyKind::kLR: return "LR";
    case FamilyKind::kSH: return "SH";
  }
  return "?";
}

FamilyKind family_from_string(const std::string& name) {
  for (FamilyKind k : {FamilyKind::kSL, FamilyKind::kFC, FamilyKind::kNC, FamilyKind::kLR, FamilyKind::kSH})
    if (name == to_string(k)) return k;
  throw ContractViolation("unknown representation '" + name + "'");
}

Vector QueryFamily::point(std::span<const double> coeffs) const {
  if (basis.cols() == 0) return Vector(basis.rows(), 0.0);
  return matvec(basis, coeffs);
}

Vector fc_complete(std::span<const double> u, std::span<const double> eta_target, const MarketModel& model) {
  if (u.size() != model.m || eta_target.size() != model.k) throw ContractViolation("fc_complete: dimension mismatch");
  Vector out = matvec(model.R_K, u);
  if (model.k > 0) out = add(matvec(model.A, eta_target), out);
  return out;
}

namespace {

Matrix leading_columns(const Matrix& a, std::size_t k) {
  Matrix out(a.rows(), k);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t c = 0; c < k; ++c) out(i, c) = a(i, c);
  return out;
}

QueryFamily assemble(FamilyKind kind, std::span<const std::size_t> names, const Matrix& atom, const Matrix& residual,
                     const Matrix& loadings, const FeasibleSet& feasible, double eta_bound) {
  const std::size_t m = residual.rows();
  const std::size_t k = atom.cols();
  QueryFamily fam;
  fam.kind = kind;
  fam.names.assign(names.begin(), names.end());
  fam.n_factor = k;
  fam.loadings = loadings;
  fam.feasible = feasible;
  fam.basis = Matrix(m, k + names.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < k; ++c) fam.basis(i, c) = atom(i, c);
    for (std::size_t s = 0; s < names.size(); ++s) fam.basis(i, k + s) = residual(i, names[s]);
  }
  fam.lo.assign(k + names.size(), 0.0);
  fam.hi.assign(k + names.size(), 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    fam.lo[c] = -eta_bound;
    fam.hi[c] = eta_bound;
  }
  for (std::size_t s = 0; s < names.size(); ++s) {
    fam.lo[k + s] = -feasible.name_cap;
    fam.hi[k + s] = feasible.name_cap;
  }
  return fam;
}

}  // namespace

QueryFamily build_family(FamilyKind kind, std::span<const std::size_t> names, const MarketModel& model,
                         const FeasibleSet& feasible, const FamilyOptions& opts) {
  const std::size_t m = model.m;
  for (std::size_t j : names)
    if (j >= m) throw ContractViolation("build_family: name index out of range");
  if (names.empty()) throw ContractViolation("build_family: empty name set");
  const Matrix eye = Matrix::identity(m);

  switch (kind) {
    case FamilyKind::kSL:
      return assemble(kind, names, Matrix(m, 0), eye, Matrix(m, 0), feasible, opts.eta_bound);
    case FamilyKind::kFC:
      return assemble(kind, names, model.A, model.R_K, model.F, feasible, opts.eta_bound);
    case FamilyKind::kNC: {
      Matrix naive(m, 0);
      if (model.k > 0) naive = matmul(model.F, inverse_spd(symmetrized(matmul_tn(model.F, model.F))));
      return assemble(kind, names, naive, eye, model.F, feasible, opts.eta_bound);
    }
    case FamilyKind::kLR: {
      const std::size_t kr = (model.k + 1) / 2;
      const Matrix f = leading_columns(model.F, kr);
      const Atoms at = build_atoms(model.Sigma, model.Delta, model.nu, model.rho_K, f);
      return assemble(kind, names, at.A, at.R_K, f, feasible, opts.eta_bound);
    }
    case FamilyKind::kSH: {
      std::vector<std::size_t> perm = opts.permutation;
      if (perm.empty()) {
        perm.resize(m);
        std::iota(perm.begin(), perm.end(), 0);
        CounterRng rng(opts.seed, {0x54ULL});
        for (std::size_t j = m; j > 1; --j) std::swap(perm[j - 1], perm[rng.index(j)]);
      }
      if (perm.size() != m) throw ContractViolation("build_family: permutation length");
      Matrix f(m, model.k);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < model.k; ++c) f(i, c) = model.F(perm[i], c);
      const Atoms at = build_atoms(model.Sigma, model.Delta, model.nu, model.rho_K, f);
      return assemble(kind, names, at.A, at.R_K, f, feasible, opts.eta_bound);
    }
  }
  throw ContractViolation("build_family: unknown kind");
}

PredictedAllocation predicted_vq_allocation(const std::vector<SurrogateParams>& surrogates,
                                            const std::vector<QueryFamily>& families, const Matrix& sigma,
                                            const Matrix& delta, const Matrix& gamma, double tol,
                                            std::size_t max_sweeps) {
  const std::size_t n = families.size();
  if (surrogates.size() != n) throw ContractViolation("predicted_vq_allocation: one surrogate per family");
  const std::size_t m = gamma.rows();

  std::vector<Matrix> block_h(n);
  std::vector<Vector> block_beta(n);
  std::vector<Matrix> hb(n);  // (Hhat + Gamma) B
  std::vector<double> block_lip(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix h = add(surrogate_curvature(surrogates[i], sigma, delta), gamma);
    hb[i] = matmul(h, families[i].basis);
    block_h[i] = symmetrized(matmul_tn(families[i].basis, hb[i]));
    block_beta[i] = families[i].dim() > 0 ? matvec_t(families[i].basis, surrogates[i].beta) : Vector{};
    block_lip[i] = families[i].dim() > 0 ? max_eigenvalue(block_h[i]) : 0.0;
  }

  std::vector<Vector> c(n);
  std::vector<Vector> q(n, Vector(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    c[i].assign(families[i].dim(), 0.0);
    for (std::size_t a = 0; a < c[i].size(); ++a) c[i][a] = std::clamp(0.0, families[i].lo[a], families[i].hi[a]);
    q[i] = families[i].point(c[i]);
  }
  auto objective = [&]() {
    Vector total(m, 0.0);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v += surrogate_value(surrogates[i], sigma, delta, q[i]);
      total = add(total, q[i]);
    }
    return v - 0.5 * quad_form(gamma, total);
  };

  PredictedAllocation out;
  Vector total(m, 0.0);
  for (const auto& x : q) total = add(total, x);
  double f = objective();
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      if (families[i].dim() == 0) continue;
      const Vector others = sub(total, q[i]);
      // Block objective: beta^T B c - 0.5 c^T B^T (H + Gamma) B c - (Gamma others)^T B c.
      const Vector lin = sub(block_beta[i], matvec_t(families[i].basis, matvec(gamma, others)));
      QpOptions qo;
      qo.tol = 1e-13;
      qo.lipschitz = std::max(block_lip[i], 1e-12);
      qo.warm_start = c[i];
      qo.max_iter = 400 * std::max<std::size_t>(families[i].dim(), 1);
      try {
        c[i] = solve_box_qp(lin, block_h[i], families[i].lo, families[i].hi, qo).x;
      } catch (const ConvergenceError& e) {
        c[i] = e.best_iterate();
      }
      q[i] = families[i].point(c[i]);
      total = add(others, q[i]);
    }
    const double f_new = objective();
    out.objective_trace.push_back(f_new);
    const bool done = f_new - f <= tol * (1.0 + std::abs(f_new));
    f = f_new;
    if (done) {
      out.converged = true;
      break;
    }
  }

  out.coefficients = c;
  out.exposure_deviation.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Vector proj = project_l1_box(q[i], families[i].feasible);
    const std::size_t k = families[i].n_factor;
    if (k > 0 && families[i].kind != FamilyKind::kSL) {
      const Vector expo = matvec_t(families[i].loadings, proj);
      double dev = 0.0;
      for (std::size_t a = 0; a < k; ++a) dev = std::max(dev, std::abs(expo[a] - c[i][a]));
      out.exposure_deviation[i] = dev;
    }
    out.proposals.push_back(std::move(proj));
  }
  return out;
}

}  // namespace qcross
