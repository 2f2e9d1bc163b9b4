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

#include "qcross/harness/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "qcross/numerics/eig.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/format.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/projection.hpp"

namespace qcross {

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::kHY: return "HY";
    case Protocol::kVO: return "VO";
    case Protocol::kDO: return "DO";
    case Protocol::kSN: return "SN";
  }
  return "?";
}

Protocol protocol_from_string(const std::string& name) {
  for (Protocol p : {Protocol::kHY, Protocol::kVO, Protocol::kDO, Protocol::kSN})
    if (name == to_string(p)) return p;
  throw ContractViolation("protocol: unknown protocol '" + name + "'");
}

std::string to_string(const ResponseMode& mode) {
  switch (mode.kind) {
    case ResponseMode::Kind::kExact: return "exact";
    case ResponseMode::Kind::kStochastic: return "stochastic:" + fmt_sig(mode.sigma);
    case ResponseMode::Kind::kRegularized: return "regularized:" + fmt_sig(mode.mu);
  }
  return "?";
}

ResponseMode response_from_string(const std::string& text) {
  if (text == "exact") return ResponseMode::exact();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = text.substr(0, colon);
    double x = 0.0;
    try {
      std::size_t used = 0;
      x = std::stod(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ContractViolation("response: bad number in '" + text + "'");
    }
    if (kind == "stochastic") return ResponseMode::stochastic(x);
    if (kind == "regularized") return ResponseMode::regularized(x);
  }
  throw ContractViolation("response: unknown mode '" + text + "'");
}

void ProtocolConfig::validate() const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ContractViolation("protocol '" + label + "': field '" + field + "' " + why);
  };
  if (total_budget == 0) fail("budget", "must be positive");
  if (dq_rounds > total_budget) fail("dq_rounds", "exceeds budget");
  if (!(rho_dq >= 0.0 && rho_dq <= 1.0)) fail("rho_dq", "must lie in [0, 1]");
  if (response.sigma < 0.0) fail("response.sigma", "must be nonnegative");
  if (response.mu < 0.0) fail("response.mu", "must be nonnegative");
  if (misspecification < 0.0) fail("misspecification", "must be nonnegative");
  if (min_l1 < 0.0) fail("min_l1", "must be nonnegative");
  if (!(step0 > 0.0)) fail("step0", "must be positive");
  if (names_per_participant == 0) fail("names", "must be positive");
  if (!(name_eps >= 0.0)) fail("name_eps", "must be nonnegative");
  if (!(w_vq >= 0.0)) fail("w_vq", "must be nonnegative");
  if (!(w_reg >= 0.0)) fail("w_reg", "must be nonnegative");
  if (!(eta_bound > 0.0)) fail("eta_bound", "must be positive");
  switch (protocol) {
    case Protocol::kHY:
      if (bridge && vq_rounds() == 0) fail("bridge", "needs at least one value round");
      break;
    case Protocol::kVO:
      if (dq_rounds != 0) fail("dq_rounds", "must be 0 for VO");
      if (bridge) fail("bridge", "is undefined without demand rounds");
      break;
    case Protocol::kDO:
    case Protocol::kSN:
      if (dq_rounds != total_budget) fail("dq_rounds", "must equal budget for demand-only protocols");
      if (bridge) fail("bridge", "is undefined without value rounds");
      break;
  }
}

MarketModel search_market(const MarketModel& market, double mu, std::uint64_t seed) {
  if (mu == 0.0) return market;
  const std::size_t m = market.m;
  CounterRng rng(seed, {0x5ea7c4ULL});
  Matrix e(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) e(a, b) = e(b, a) = rng.normal();
  e = scaled(e, 1.0 / frobenius(e));
  const Matrix sigma = psd_project(add(market.Sigma, scaled(e, mu * frobenius(market.Sigma))));
  Vector liq(m);
  // Delta_jj exp(mu g_j) with Delta_jj = 1 / l_j.
  for (std::size_t j = 0; j < m; ++j) liq[j] = market.liquidity[j] * std::exp(-mu * rng.normal());
  MarketParams p;
  p.k = market.k;
  p.nu = market.nu;
  p.rho_K = market.rho_K;
  p.gamma_res = market.gamma_res;
  p.normalize_sigma = false;
  return assemble_market(sigma, liq, p, market.label + "~", market.tickers);
}

ReportSet reports_from_trace(const std::string& jsonl, std::size_t n, std::size_t m) {
  ReportSet out(n, m);
  std::size_t start = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string::npos) end = jsonl.size();
    const std::string line = jsonl.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "dq") {
      DemandReport r;
      r.participant = j.at("participant").get<std::size_t>();
      r.round = j.at("round").get<std::size_t>();
      r.price = j.at("price").get<Vector>();
      r.trade = j.at("trade").get<Vector>();
      r.lower_bound = j.at("lower_bound").get<double>();
      out.add(std::move(r));
    } else if (type == "vq") {
      ValueReport r;
      r.participant = j.at("participant").get<std::size_t>();
      r.round = j.at("round").get<std::size_t>();
      r.package = j.at("package").get<Vector>();
      r.value = j.at("value").get<double>();
      const std::string tag = j.at("tag").get<std::string>();
      bool known = false;
      for (ValueTag t : {ValueTag::kNoTrade, ValueTag::kBridge, ValueTag::kModelGuided, ValueTag::kProbe})
        if (tag == to_string(t)) {
          r.tag = t;
          known = true;
        }
      if (!known) throw ContractViolation("reports_from_trace: unknown tag '" + tag + "'");
      out.add(std::move(r));
    }
  }
  return out;
}

std::vector<Vector> same_name_crossing(const std::vector<Vector>& trades) {
  if (trades.empty()) return {};
  const std::size_t m = trades.front().size();
  Vector buy_scale(m, 0.0), sell_scale(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double buys = 0.0, sells = 0.0;
    for (const auto& d : trades) {
      if (d[j] > 0.0) buys += d[j];
      if (d[j] < 0.0) sells -= d[j];
    }
    const double matched = std::min(buys, sells);
    buy_scale[j] = buys > 0.0 ? matched / buys : 0.0;
    sell_scale[j] = sells > 0.0 ? matched / sells : 0.0;
  }
  std::vector<Vector> out;
  for (const auto& d : trades) {
    Vector q(m);
    for (std::size_t j = 0; j < m; ++j) q[j] = d[j] * (d[j] > 0.0 ? buy_scale[j] : sell_scale[j]);
    out.push_back(std::move(q));
  }
  return out;
}

const char* to_string(LeakageMetric m) {
  switch (m) {
    case LeakageMetric::kActivePair: return "active_pair";
    case LeakageMetric::kEffectiveName: return "effective_name";
    case LeakageMetric::kQuantityWeighted: return "quantity_weighted";
    case LeakageMetric::kTopName: return "top_name";
  }
  return "?";
}

LeakageMetric leakage_metric_from_string(const std::string& name) {
  for (LeakageMetric m : {LeakageMetric::kActivePair, LeakageMetric::kEffectiveName, LeakageMetric::kQuantityWeighted,
                          LeakageMetric::kTopName})
    if (name == to_string(m)) return m;
  throw ContractViolation("unknown leakage metric '" + name + "'");
}

double leakage_index(const std::vector<Vector>& trades, const std::vector<double>& gross_caps, LeakageMetric metric,
                     double omega, double eps) {
  if (!(eps > 0.0)) throw ContractViolation("leakage_index: eps must be positive");
  const std::size_t n = trades.size();
  if (n == 0) return 0.0;
  const std::size_t m = trades.front().size();
  double raw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector& d = trades[i];
    switch (metric) {
      case LeakageMetric::kActivePair:
        for (double x : d) raw += std::abs(x) > eps ? 1.0 : 0.0;
        break;
      case LeakageMetric::kEffectiveName: {
        const double l1 = norm1(d);
        const double l2sq = dot(d, d);
        if (l2sq > 0.0) raw += l1 * l1 / l2sq / static_cast<double>(m);
        break;
      }
      case LeakageMetric::kQuantityWeighted:
        raw += norm1(d) / gross_caps.at(i);
        break;
      case LeakageMetric::kTopName:
        raw += norm_inf(d) > eps ? 1.0 : 0.0;
        break;
    }
  }
  raw /= static_cast<double>(n);
  if (metric == LeakageMetric::kActivePair) raw /= static_cast<double>(m);
  return std::min(1.0, omega * raw);
}

LeakageIndices leakage_indices(const EconomyCell& cell, const std::vector<Vector>& trades, double eps) {
  std::vector<double> caps;
  for (const auto& p : cell.participants) caps.push_back(p.feasible.gross_cap);
  return {leakage_index(trades, caps, LeakageMetric::kActivePair, 1.0, eps),
          leakage_index(trades, caps, LeakageMetric::kEffectiveName, 1.0, eps),
          leakage_index(trades, caps, LeakageMetric::kQuantityWeighted, 1.0, eps),
          leakage_index(trades, caps, LeakageMetric::kTopName, 1.0, eps)};
}

double select_leakage(const LeakageIndices& l, LeakageMetric metric) {
  switch (metric) {
    case LeakageMetric::kActivePair: return l.active_pair;
    case LeakageMetric::kEffectiveName: return l.effective_name;
    case LeakageMetric::kQuantityWeighted: return l.quantity_weighted;
    case LeakageMetric::kTopName: return l.top_name;
  }
  return 0.0;
}

namespace {

// Mutable state of one protocol run.
class Session {
 public:
  Session(const EconomyCell& cell, const ProtocolConfig& cfg, TraceLog* trace, const ReportSet* replay = nullptr)
      : cell_(cell),
        cfg_(cfg),
        trace_(trace),
        replay_(replay),
        search_(search_market(*cell.market, cfg.misspecification, cell.seed)),
        reports_(cell.n(), cell.m()),
        surrogates_(cell.n(), SurrogateParams::prior(cell.m())),
        basis_(initial_basis(search_)),
        last_price_(cell.m(), 0.0) {
    double cap = 0.0;
    for (const auto& p : cell.participants) cap = std::max(cap, p.feasible.name_cap);
    name_eps_ = cfg.name_eps * cap;
    for (std::size_t i = 0; i < cell.n(); ++i) rngs_.emplace_back(cell.seed, std::initializer_list<std::uint64_t>{0x7e59ULL, i});
  }

  ReportSet& reports() { return reports_; }
  const Vector& last_price() const { return last_price_; }

  void demand_rounds(std::size_t rounds) {
    for (std::size_t l = 1; l <= rounds; ++l) {
      const Vector p = basis_.prices();
      last_price_ = p;
      for (std::size_t i = 0; i < cell_.n(); ++i) {
        DemandReport r = respond(i, p, l);
        if (trace_) trace_->record(r);
        reports_.add(std::move(r));
      }
      refit(true);
      std::vector<std::size_t> flags(cell_.m(), 0);
      for (std::size_t i = 0; i < cell_.n(); ++i)
        for (std::size_t j : active_names(reports_.of(i), cfg_.names_per_participant, name_eps_)) ++flags[j];
      std::vector<std::size_t> shared;
      for (std::size_t j = 0; j < cell_.m(); ++j)
        if (flags[j] >= cfg_.shared_flags) shared.push_back(j);
      extend_basis(basis_, shared);
      const Vector q = basis_.prices();
      Vector total(cell_.m(), 0.0);
      for (std::size_t i = 0; i < cell_.n(); ++i) {
        const Matrix h = surrogate_curvature(surrogates_[i], search_.Sigma, search_.Delta);
        total = add(total, surrogate_demand(surrogates_[i], h, q, cell_.participants[i].feasible));
      }
      basis_ = price_update(basis_, total, search_.Gamma_inv, cfg_.step0 / std::sqrt(static_cast<double>(l)));
    }
  }

  WdpSolution allocate(double rho_dq) const {
    InferenceOptions io;
    io.rho_dq = rho_dq;
    io.min_l1 = cfg_.min_l1;
    WdpOptions wo;
    wo.node_limit = cfg_.wdp_node_limit;
    return solve_wdp(build_inferred_values(reports_, io), cell_.market->Gamma, wo);
  }

  void add_values(const std::vector<Vector>& packages, ValueTag tag, std::size_t round) {
    for (std::size_t i = 0; i < cell_.n(); ++i) {
      ValueReport r = evaluate(i, packages[i], tag, round);
      if (trace_) trace_->record(r);
      reports_.add(std::move(r));
    }
  }

  std::vector<Vector> random_factor_probes() {
    std::vector<Vector> out;
    const MarketModel& mm = search_;
    for (std::size_t i = 0; i < cell_.n(); ++i) {
      CounterRng rng(cell_.seed, {0x9b0eULL, i});
      Vector q(mm.m, 0.0);
      if (mm.k > 0) {
        Vector eta(mm.k);
        for (auto& x : eta) x = rng.normal();
        q = matvec(mm.A, eta);
      } else {
        q[rng.index(mm.m)] = rng.normal();
      }
      out.push_back(project_l1_box(q, cell_.participants[i].feasible));
    }
    return out;
  }

  std::vector<Vector> model_guided_proposals(bool use_dq) {
    refit(use_dq);
    std::vector<QueryFamily> fams;
    for (std::size_t i = 0; i < cell_.n(); ++i) {
      std::vector<std::size_t> names = active_names(reports_.of(i), cfg_.names_per_participant, name_eps_);
      if (names.empty()) {
        const auto& b = surrogates_[i].beta;
        std::size_t best = 0;
        for (std::size_t j = 1; j < b.size(); ++j)
          if (std::abs(b[j]) > std::abs(b[best])) best = j;
        names.push_back(best);
      }
      FamilyOptions fo;
      fo.eta_bound = cfg_.eta_bound;
      fo.seed = cell_.seed;
      fams.push_back(build_family(cfg_.family, names, search_, cell_.participants[i].feasible, fo));
    }
    return predicted_vq_allocation(surrogates_, fams, search_.Sigma, search_.Delta, search_.Gamma).proposals;
  }

 private:
  DemandReport respond(std::size_t i, const Vector& p, std::size_t round) {
    if (!replay_) {
      DemandReport r = demand_query(cell_.participants[i], p, cfg_.response, rngs_[i], cfg_.rho_dq, round);
      r.participant = i;
      return r;
    }
    for (const auto& r : replay_->of(i).dq)
      if (r.round == round) {
        if (r.price != p) throw ContractViolation("replay: posted price differs from the trace");
        DemandReport out = r;
        out.participant = i;
        return out;
      }
    throw ContractViolation("replay: trace lacks a demand report");
  }

  ValueReport evaluate(std::size_t i, const Vector& q, ValueTag tag, std::size_t round) const {
    if (!replay_) {
      ValueReport r = value_query(cell_.participants[i], q, tag, round);
      r.participant = i;
      return r;
    }
    for (const auto& r : replay_->of(i).vq)
      if (r.round == round && r.tag == tag) {
        if (r.package != q) throw ContractViolation("replay: queried package differs from the trace");
        ValueReport out = r;
        out.participant = i;
        return out;
      }
    throw ContractViolation("replay: trace lacks a value report");
  }

  void refit(bool use_dq) {
    SurrogateOptions so;
    so.w_vq = cfg_.w_vq;
    so.w_reg = cfg_.w_reg;
    so.use_dq = use_dq;
    for (std::size_t i = 0; i < cell_.n(); ++i)
      surrogates_[i] = fit_surrogate(reports_.of(i), cell_.participants[i].feasible, search_.Sigma, search_.Delta, so);
  }

  const EconomyCell& cell_;
  const ProtocolConfig& cfg_;
  TraceLog* trace_;
  const ReportSet* replay_;
  MarketModel search_;
  ReportSet reports_;
  std::vector<SurrogateParams> surrogates_;
  PriceBasis basis_;
  Vector last_price_;
  double name_eps_ = 0.0;
  std::vector<CounterRng> rngs_;
};

Vector aggregate(const std::vector<Vector>& trades, std::size_t m) {
  Vector s(m, 0.0);
  for (const auto& d : trades) s = add(s, d);
  return s;
}

}  // namespace

ProtocolRun run_protocol_detailed(const EconomyCell& cell, const ProtocolConfig& cfg, TraceLog* trace,
                                  double leakage_eps, const ReportSet* replay) {
  ProtocolRun run;
  CellResult& res = run.result;
  res.config = cfg.label;
  res.protocol = to_string(cfg.protocol);
  res.total_budget = cfg.total_budget;
  res.dq_rounds = cfg.dq_rounds;
  res.bridge = cfg.bridge;
  res.rho_dq = cfg.rho_dq;
  res.response = to_string(cfg.response);
  res.misspecification = cfg.misspecification;
  res.min_l1 = cfg.min_l1;
  res.market = cell.market->label;
  res.zeta_contra = cell.zeta_contra;
  res.seed = cell.seed;
  res.family = cfg.protocol == Protocol::kSN ? "SN" : to_string(cfg.family);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!cell.oracle) throw ContractViolation("run_protocol: oracle not computed");
  res.w_star = cell.oracle->welfare;
  try {
    cfg.validate();
    const std::size_t m = cell.m();
    Session s(cell, cfg, trace, replay);
    s.demand_rounds(cfg.dq_rounds);

    std::vector<Vector> final_trades;
    if (cfg.protocol == Protocol::kSN) {
      std::vector<Vector> last;
      for (std::size_t i = 0; i < cell.n(); ++i) {
        Vector d = s.reports().of(i).dq.back().trade;
        if (norm1(d) < cfg.min_l1) d.assign(m, 0.0);
        last.push_back(std::move(d));
      }
      final_trades = same_name_crossing(last);
      res.dq_trades = final_trades;
      res.reported_welfare = nan;
    } else {
      const WdpSolution a_dq = s.allocate(cfg.rho_dq);
      res.dq_trades = a_dq.trades;
      res.wdp_exact = a_dq.exact;
      std::size_t round = cfg.dq_rounds + 1;
      std::size_t left = cfg.vq_rounds();
      if (cfg.bridge && left > 0) {
        s.add_values(a_dq.trades, ValueTag::kBridge, round++);
        --left;
      }
      if (cfg.protocol == Protocol::kVO && left > 0) {
        s.add_values(s.random_factor_probes(), ValueTag::kProbe, round++);
        --left;
      }
      for (; left > 0; --left)
        s.add_values(s.model_guided_proposals(cfg.protocol != Protocol::kVO), ValueTag::kModelGuided, round++);
      const WdpSolution fin = cfg.vq_rounds() > 0 ? s.allocate(cfg.rho_dq) : a_dq;
      res.wdp_exact = res.wdp_exact && fin.exact;
      res.reported_welfare = fin.reported_welfare;
      final_trades = fin.trades;
    }

    res.final_trades = final_trades;
    res.welfare = welfare(cell, final_trades);
    res.efficiency = efficiency(res.welfare, res.w_star);
    res.dq_welfare = welfare(cell, res.dq_trades);
    res.dq_efficiency = efficiency(res.dq_welfare, res.w_star);
    const Vector total = aggregate(final_trades, m);
    res.residual_l1 = norm1(total);
    res.crossed_notional = 0.0;
    for (const auto& d : final_trades) res.crossed_notional += norm1(d);
    res.leakage = leakage_indices(cell, final_trades, leakage_eps);
    const Vector price = cfg.dq_rounds > 0 ? s.last_price() : matvec(cell.market->Gamma, total);
    res.certificate_gap = certificate(cell, price, final_trades).gap;
    res.incumbent_ok = final_vs_incumbent_check(cell, final_trades, res.dq_trades);
    for (std::size_t i = 0; i < cell.n(); ++i)
      res.budget_ok = res.budget_ok && s.reports().queries(i) == cfg.total_budget;
    run.last_price = s.last_price();
    run.reports = s.reports();
  } catch (const std::exception& e) {
    res.error = e.what();
    res.welfare = res.efficiency = res.dq_welfare = res.dq_efficiency = res.reported_welfare = nan;
    res.residual_l1 = res.crossed_notional = res.certificate_gap = nan;
    res.leakage = {nan, nan, nan, nan};
    res.incumbent_ok = false;
    res.budget_ok = false;
    if (trace) trace->record_event("error", nlohmann::json(std::string(e.what())).dump());
  }
  return run;
}

CellResult run_protocol(const EconomyCell& cell, const ProtocolConfig& cfg, TraceLog* trace, double leakage_eps) {
  return run_protocol_detailed(cell, cfg, trace, leakage_eps).result;
}

namespace {

ReportSet demand_prefix(const ReportSet& all, std::size_t rounds) {
  ReportSet out(all.n(), all.m());
  for (std::size_t i = 0; i < all.n(); ++i)
    for (const auto& r : all.of(i).dq)
      if (r.round <= rounds) out.add(r);
  return out;
}

double bridged_welfare(const EconomyCell& cell, ReportSet reports, double rho_dq, std::size_t round,
                       std::size_t node_limit) {
  InferenceOptions io;
  io.rho_dq = rho_dq;
  WdpOptions wo;
  wo.node_limit = node_limit;
  const WdpSolution a_dq = solve_wdp(build_inferred_values(reports, io), cell.market->Gamma, wo);
  for (auto r : bridge_query(cell, a_dq.trades, round)) reports.add(std::move(r));
  return welfare(cell, solve_wdp(build_inferred_values(reports, io), cell.market->Gamma, wo).trades);
}

}  // namespace

std::vector<DiagnosticRow> diagnostic_accounting(const EconomyCell& cell, const ProtocolConfig& cfg,
                                                 const std::vector<double>& rho_grid) {
  if (!cell.oracle) throw ContractViolation("diagnostic_accounting: oracle not computed");
  if (cfg.dq_rounds < 2) throw ContractViolation("diagnostic_accounting: needs at least two demand rounds");
  ProtocolConfig dq = cfg;
  dq.protocol = Protocol::kDO;
  dq.total_budget = cfg.dq_rounds;
  dq.bridge = false;
  Session s(cell, dq, nullptr);
  s.demand_rounds(dq.dq_rounds);
  const ReportSet& reports = s.reports();
  const double w_star = cell.oracle->welfare;
  WdpOptions wo;
  wo.node_limit = cfg.wdp_node_limit;

  std::vector<DiagnosticRow> rows;
  auto push = [&](std::string rule, double w) { rows.push_back({std::move(rule), w, efficiency(w, w_star)}); };

  const InferredValueTable bounds = build_inferred_values(reports, {});
  push("primitive", welfare(cell, solve_wdp(primitive_values(cell, bounds), cell.market->Gamma, wo).trades));
  // The bridge verifies the interim allocation chosen under full-price
  // bounds, the least conservative revealed-preference rule.
  push("bridge_extra", bridged_welfare(cell, reports, 1.0, dq.dq_rounds + 1, wo.node_limit));
  push("bridge_within", bridged_welfare(cell, demand_prefix(reports, dq.dq_rounds - 1), 1.0, dq.dq_rounds, wo.node_limit));
  for (double rho : rho_grid) {
    InferenceOptions io;
    io.rho_dq = rho;
    const WdpSolution sol = solve_wdp(build_inferred_values(reports, io), cell.market->Gamma, wo);
    push("rp_" + fmt_sig(rho, 3), welfare(cell, sol.trades));
  }
  return rows;
}

}  // namespace qcross
