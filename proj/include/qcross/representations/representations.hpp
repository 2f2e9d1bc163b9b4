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
#include <span>
#include <string>
#include <vector>

#include "qcross/elicitation/elicitation.hpp"
#include "qcross/market/market_model.hpp"
#include "qcross/numerics/matrix.hpp"
#include "qcross/numerics/projection.hpp"

namespace qcross {

enum class FamilyKind { kSL, kFC, kNC, kLR, kSH };
const char* to_string(FamilyKind kind);
FamilyKind family_from_string(const std::string& name);

/// Proposals are basis * c with c in the box [lo, hi], projected onto X.
struct QueryFamily {
  FamilyKind kind = FamilyKind::kSL;
  std::vector<std::size_t> names;
  Matrix basis;                ///< m x (n_factor + |names|)
  std::size_t n_factor = 0;    ///< leading factor-target coordinates
  Matrix loadings;             ///< F used for the exposure target (m x n_factor)
  Vector lo;
  Vector hi;
  FeasibleSet feasible;

  std::size_t dim() const { return basis.cols(); }
  Vector point(std::span<const double> coeffs) const;
};

/// A eta + R_K u
Vector fc_complete(std::span<const double> u, std::span<const double> eta_target, const MarketModel& model);

struct FamilyOptions {
  double eta_bound = 2.0;
  std::vector<std::size_t> permutation;  ///< SH row permutation; empty draws one from the seed
  std::uint64_t seed = 0;
};

/// SL: E_S. NC: [F (F^T F)^-1 | E_S]. FC: [A | R_K E_S]. LR: FC on the
/// leading ceil(k/2) factors. SH: FC with the rows of F permuted.
QueryFamily build_family(FamilyKind kind, std::span<const std::size_t> names, const MarketModel& model,
                         const FeasibleSet& feasible, const FamilyOptions& opts = {});

struct PredictedAllocation {
  std::vector<Vector> proposals;     ///< projected into each X_i
  std::vector<Vector> coefficients;
  std::vector<double> objective_trace;  ///< surrogate welfare after each sweep
  Vector exposure_deviation;         ///< ||F^T q - eta||_max after projection
  bool converged = false;
};

/// Block-coordinate ascent on sum vhat_i(B_i c_i) - Psi(-sum B_i c_i) over
/// the coefficient boxes; proposals are then projected onto X_i.
PredictedAllocation predicted_vq_allocation(const std::vector<SurrogateParams>& surrogates,
                                            const std::vector<QueryFamily>& families, const Matrix& sigma,
                                            const Matrix& delta, const Matrix& gamma, double tol = 1e-9,
                                            std::size_t max_sweeps = 200);

}  // namespace qcross
