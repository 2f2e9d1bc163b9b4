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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qcross/economy/economy.hpp"
#include "qcross/elicitation/elicitation.hpp"
#include "qcross/numerics/matrix.hpp"

namespace qcross {

struct Candidate {
  Vector package;
  double value = 0.0;
  bool exact = false;
};

/// Candidate 0 of every participant is no-trade at value 0.
struct InferredValueTable {
  std::vector<std::vector<Candidate>> candidates;

  std::size_t n() const { return candidates.size(); }
  double combinations() const;
};

struct InferenceOptions {
  double rho_dq = 0.35;
  bool use_dq = true;
  bool use_vq = true;
  double min_l1 = 0.0;          ///< drop non-zero packages with ||q||_1 below this
  double match_tol = 1e-10;     ///< max-norm package equality
};

/// Exact VQ values override DQ bounds on equal packages; DQ-only packages
/// take the largest bound across appearances. Order: no-trade, then first
/// appearance across DQ rounds, then VQ reports.
InferredValueTable build_inferred_values(const ReportSet& reports, const InferenceOptions& opts = {});

/// Table of the given packages valued by the participants' primitives.
InferredValueTable primitive_values(const EconomyCell& cell, const InferredValueTable& table);

struct WdpSolution {
  std::vector<std::size_t> selection;
  double reported_welfare = 0.0;
  std::vector<Vector> trades;
  bool exact = true;            ///< false when the node limit stopped the search
  std::size_t nodes = 0;
};

/// sum v_{i, y_i} - 0.5 s^T Gamma s, s = sum q_{i, y_i}, summed in index order.
double report_welfare(const InferredValueTable& table, const Matrix& gamma, std::span<const std::size_t> selection);

struct WdpOptions {
  double enumeration_limit = 1e6;
  std::size_t node_limit = 50'000'000;
  bool force_branch_and_bound = false;
};

/// Maximizes report welfare; ties go to the lexicographically smallest
/// selection vector.
WdpSolution solve_wdp(const InferredValueTable& table, const Matrix& gamma, const WdpOptions& opts = {});
WdpSolution solve_wdp_enumeration(const InferredValueTable& table, const Matrix& gamma);
WdpSolution solve_wdp_branch_and_bound(const InferredValueTable& table, const Matrix& gamma,
                                       std::size_t node_limit = 50'000'000);

/// W(final) >= W(a_dq) - 1e-9 under primitive welfare.
bool final_vs_incumbent_check(const EconomyCell& cell, const std::vector<Vector>& final_trades,
                              const std::vector<Vector>& dq_trades);

struct DualValue {
  double value = 0.0;
  std::vector<Vector> demands;
};

/// sum_i [v_i(d_i(p)) - p^T d_i(p)] + 0.5 p^T Gamma^-1 p
DualValue true_dual(const EconomyCell& cell, std::span<const double> price);

struct DualCertificate {
  Vector price;
  double dual = 0.0;
  double welfare = 0.0;
  double gap = 0.0;
};

DualCertificate certificate(const EconomyCell& cell, std::span<const double> price,
                            const std::vector<Vector>& verified_trades);

std::string table_to_json(const InferredValueTable& table);
InferredValueTable table_from_json(const std::string& text);

}  // namespace qcross
