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
#include "qcross/numerics/matrix.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {

struct ResponseMode {
  enum class Kind { kExact, kStochastic, kRegularized };
  Kind kind = Kind::kExact;
  double sigma = 0.0;  ///< stochastic perturbation scale
  double mu = 0.0;     ///< regularization added to H

  static ResponseMode exact() { return {}; }
  static ResponseMode stochastic(double s) { return {Kind::kStochastic, s, 0.0}; }
  static ResponseMode regularized(double m) { return {Kind::kRegularized, 0.0, m}; }
};

struct DemandReport {
  std::size_t participant = 0;
  std::size_t round = 0;
  Vector price;
  Vector trade;
  double lower_bound = 0.0;
};

enum class ValueTag { kNoTrade, kBridge, kModelGuided, kProbe };
const char* to_string(ValueTag tag);

struct ValueReport {
  std::size_t participant = 0;
  std::size_t round = 0;
  Vector package;
  double value = 0.0;
  ValueTag tag = ValueTag::kModelGuided;
};

struct ParticipantReports {
  std::vector<DemandReport> dq;
  std::vector<ValueReport> vq;  ///< vq[0] is the no-trade package
};

/// Append-only report store; every participant starts with no-trade at 0.
class ReportSet {
 public:
  ReportSet() = default;
  ReportSet(std::size_t n, std::size_t m);

  std::size_t n() const { return parts_.size(); }
  std::size_t m() const { return m_; }
  const ParticipantReports& of(std::size_t i) const { return parts_.at(i); }

  void add(DemandReport r);
  void add(ValueReport r);

  /// Queries issued to participant i (no-trade excluded).
  std::size_t queries(std::size_t i) const;

 private:
  std::size_t m_ = 0;
  std::vector<ParticipantReports> parts_;
};

/// rho_dq p^T d if p^T d >= 0, else p^T d.
double dq_lower_bound(std::span<const double> price, std::span<const double> trade, double rho_dq);

/// Participant best response at `price` under the response mode.
DemandReport demand_query(const Participant& part, std::span<const double> price, const ResponseMode& mode,
                          CounterRng& rng, double rho_dq, std::size_t round = 0);

ValueReport value_query(const Participant& part, std::span<const double> package, ValueTag tag,
                        std::size_t round = 0);

/// Exact values of the interim allocation, one per participant.
std::vector<ValueReport> bridge_query(const EconomyCell& cell, const std::vector<Vector>& a_dq,
                                      std::size_t round = 0);

/// Price directions Phi = [F, g_liq, E_C]; prices are Phi kappa.
struct PriceBasis {
  Matrix columns;                 ///< m x r, linearly independent
  std::size_t n_factor = 0;       ///< leading factor columns kept
  bool has_liquidity = false;
  std::vector<std::size_t> names; ///< discovered names with a column
  Vector kappa;

  std::size_t rank() const { return columns.cols(); }
  Vector prices() const;
};

/// Factor columns and the normalized 1/sqrt(l) liquidity column; kappa = 0.
PriceBasis initial_basis(const MarketModel& market);

/// Appends unit columns for new names, skipping ones already present or
/// linearly dependent (tolerance 1e-10). New coefficients start at 0.
void extend_basis(PriceBasis& basis, std::span<const std::size_t> names);

/// kappa' = kappa + step Phi^T [sum_d - Gamma^-1 Phi kappa]
PriceBasis price_update(const PriceBasis& basis, std::span<const double> total_predicted_demand,
                        const Matrix& gamma_inv, double step);

/// Activity M_j = sum |x_j| over every reported trade and package; top s
/// names with M_j > eps, ties to the lower index, returned ascending.
std::vector<std::size_t> active_names(const ParticipantReports& reports, std::size_t s, double eps);

struct SurrogateParams {
  Vector beta;
  double lambda = 1.0;
  double gamma = 1.0;
  double rho = 0.05;
  bool degenerate = false;

  static SurrogateParams prior(std::size_t m);
};

struct SurrogateOptions {
  double w_vq = 4.0;
  double w_reg = 1e-3;
  double active_tol = 1e-8;
  bool use_dq = true;
  bool use_vq = true;
};

/// Orthogonal projector onto the tangent space of the active constraints
/// of X at d.
Matrix tangent_projector(std::span<const double> d, const FeasibleSet& set, double tol = 1e-8);

/// Mixed estimator: DQ rows P[beta - (lambda Sigma + gamma Delta + rho I) d - p]
/// and sqrt(w_vq) [vhat(q) - vbar] rows, nonnegative curvature, ridge w_reg
/// centered on the prior parameters.
/// `sigma` and `delta` are the curvature inputs the platform believes.
SurrogateParams fit_surrogate(const ParticipantReports& reports, const FeasibleSet& set, const Matrix& sigma,
                              const Matrix& delta, const SurrogateOptions& opts = {});

Matrix surrogate_curvature(const SurrogateParams& s, const Matrix& sigma, const Matrix& delta);
double surrogate_value(const SurrogateParams& s, const Matrix& sigma, const Matrix& delta,
                       std::span<const double> d);

/// Predicted best response of the surrogate at `price` over X.
Vector surrogate_demand(const SurrogateParams& s, const Matrix& curvature, std::span<const double> price,
                        const FeasibleSet& set);

/// Trace numbers round-trip exactly so a trace can be replayed.
inline constexpr int kTraceDigits = 17;

/// One JSON object per query.
class TraceLog {
 public:
  explicit TraceLog(bool enabled = false) : enabled_(enabled) {}
  bool enabled() const { return enabled_; }
  void set_context(std::string context) { context_ = std::move(context); }
  void record(const DemandReport& r);
  void record(const ValueReport& r);
  void record_event(const std::string& kind, const std::string& detail);
  const std::string& text() const { return text_; }

 private:
  bool enabled_;
  std::string context_;
  std::string text_;
};

}  // namespace qcross
