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
#include <cstdint>
#include <string>
#include <vector>

#include "qcross/allocation/allocation.hpp"
#include "qcross/economy/economy.hpp"
#include "qcross/elicitation/elicitation.hpp"
#include "qcross/representations/representations.hpp"

namespace qcross {

/// HY: demand then value rounds. VO: value rounds only. DO: demand rounds
/// only. SN: demand rounds, then same-name crossing of the last round.
enum class Protocol { kHY, kVO, kDO, kSN };
const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& name);

/// "exact", "stochastic:<sigma>" or "regularized:<mu>".
std::string to_string(const ResponseMode& mode);
ResponseMode response_from_string(const std::string& text);

struct ProtocolConfig {
  std::string label = "HY";
  Protocol protocol = Protocol::kHY;
  FamilyKind family = FamilyKind::kFC;
  std::size_t total_budget = 18;
  std::size_t dq_rounds = 12;
  bool bridge = true;
  double rho_dq = 0.35;
  ResponseMode response;
  double misspecification = 0.0;  ///< mu
  double min_l1 = 0.0;
  double step0 = 0.2;
  std::size_t names_per_participant = 5;
  double name_eps = 0.02;         ///< times the largest name cap in the cell
  std::size_t shared_flags = 2;
  double w_vq = 4.0;
  double w_reg = 1e-3;
  double eta_bound = 2.0;
  std::size_t wdp_node_limit = 2'000'000;

  std::size_t vq_rounds() const { return total_budget - dq_rounds; }
  /// Throws ContractViolation naming the offending field.
  void validate() const;
};

struct LeakageIndices {
  double active_pair = 0.0;
  double effective_name = 0.0;
  double quantity_weighted = 0.0;
  double top_name = 0.0;
};

struct CellResult {
  std::string config;
  std::string protocol;
  std::size_t total_budget = 0;
  std::size_t dq_rounds = 0;
  bool bridge = false;
  double rho_dq = 0.0;
  std::string response;
  double misspecification = 0.0;
  double min_l1 = 0.0;
  std::size_t cell = 0;
  std::string market;
  double zeta_contra = 0.0;
  std::uint64_t seed = 0;
  std::string family;
  double w_star = 0.0;
  double welfare = 0.0;
  double efficiency = 0.0;
  double dq_welfare = 0.0;
  double dq_efficiency = 0.0;
  double reported_welfare = 0.0;
  double residual_l1 = 0.0;
  double crossed_notional = 0.0;
  LeakageIndices leakage;  ///< omega = 1
  double certificate_gap = 0.0;
  bool incumbent_ok = true;
  bool budget_ok = true;
  bool wdp_exact = true;
  std::string error;

  std::vector<Vector> final_trades;
  std::vector<Vector> dq_trades;
};

/// Copy of the market with Sigma + mu ||Sigma||_F E (E symmetric, unit
/// Frobenius norm) projected to PSD and Delta_jj exp(mu g_j); mu = 0
/// returns the market itself.
MarketModel search_market(const MarketModel& market, double mu, std::uint64_t seed);

struct ProtocolRun {
  CellResult result;
  ReportSet reports;
  Vector last_price;
};

/// Runs the configured protocol on a cell whose oracle is already cached.
/// With `replay` set, participant responses are read from that report set
/// instead of being computed; posted prices and packages must match the
/// recorded ones or the run fails.
ProtocolRun run_protocol_detailed(const EconomyCell& cell, const ProtocolConfig& cfg, TraceLog* trace = nullptr,
                                  double leakage_eps = 0.01, const ReportSet* replay = nullptr);
CellResult run_protocol(const EconomyCell& cell, const ProtocolConfig& cfg, TraceLog* trace = nullptr,
                        double leakage_eps = 0.01);

/// Report set recorded in a trace (demand and value lines only).
ReportSet reports_from_trace(const std::string& jsonl, std::size_t n, std::size_t m);

/// Pro-rata same-name matching: each name's buys and sells are scaled to
/// the smaller side, so the residual is zero.
std::vector<Vector> same_name_crossing(const std::vector<Vector>& trades);

LeakageIndices leakage_indices(const EconomyCell& cell, const std::vector<Vector>& trades, double eps);

enum class LeakageMetric { kActivePair, kEffectiveName, kQuantityWeighted, kTopName };
const char* to_string(LeakageMetric m);
LeakageMetric leakage_metric_from_string(const std::string& name);
double leakage_index(const std::vector<Vector>& trades, const std::vector<double>& gross_caps, LeakageMetric metric,
                     double omega, double eps);
double select_leakage(const LeakageIndices& l, LeakageMetric metric);

struct DiagnosticRow {
  std::string rule;
  double welfare = 0.0;
  double efficiency = 0.0;
};

/// Runs cfg.dq_rounds demand rounds and values the discovered candidate set
/// under primitives, under bounds at each rho_dq, and with a full-price bridge
/// inside the budget (one fewer demand round) or on top of it.
std::vector<DiagnosticRow> diagnostic_accounting(const EconomyCell& cell, const ProtocolConfig& cfg,
                                                 const std::vector<double>& rho_grid = {0.10, 0.35, 0.70, 1.0});

}  // namespace qcross
