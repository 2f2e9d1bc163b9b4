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

#include "qcross/allocation/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/qp.hpp"

namespace qcross {

double InferredValueTable::combinations() const {
  double c = 1.0;
  for (const auto& k : candidates) c *= static_cast<double>(k.size());
  return c;
}

namespace {

bool same_package(std::span<const double> a, std::span<const double> b, double tol) {
  for (std::size_t j = 0; j < a.size(); ++j)
    if (std::abs(a[j] - b[j]) > tol) return false;
  return true;
}

}  // namespace

InferredValueTable build_inferred_values(const ReportSet& reports, const InferenceOptions& opts) {
  InferredValueTable table;
  table.candidates.resize(reports.n());
  const std::size_t m = reports.m();
  for (std::size_t i = 0; i < reports.n(); ++i) {
    auto& cands = table.candidates[i];
    cands.push_back({Vector(m, 0.0), 0.0, true});
    auto keep = [&](const Vector& q) {
      const double l1 = norm1(q);
      return l1 == 0.0 || l1 >= opts.min_l1;
    };
    auto find = [&](const Vector& q) -> Candidate* {
      for (auto& c : cands)
        if (same_package(c.package, q, opts.match_tol)) return &c;
      return nullptr;
    };
    const auto& pr = reports.of(i);
    if (opts.use_dq) {
      for (const auto& r : pr.dq) {
        if (!keep(r.trade)) continue;
        const double bound = dq_lower_bound(r.price, r.trade, opts.rho_dq);
        if (Candidate* c = find(r.trade)) {
          if (!c->exact) c->value = std::max(c->value, bound);
        } else {
          cands.push_back({r.trade, bound, false});
        }
      }
    }
    if (opts.use_vq) {
      for (const auto& r : pr.vq) {
        if (r.tag == ValueTag::kNoTrade || !keep(r.package)) continue;
        if (Candidate* c = find(r.package)) {
          c->value = r.value;
          c->exact = true;
        } else {
          cands.push_back({r.package, r.value, true});
        }
      }
    }
  }
  return table;
}

InferredValueTable primitive_values(const EconomyCell& cell, const InferredValueTable& table) {
  if (table.n() != cell.n()) throw ContractViolation("primitive_values: participant count");
  InferredValueTable out = table;
  for (std::size_t i = 0; i < out.n(); ++i)
    for (auto& c : out.candidates[i]) {
      c.value = value(cell.participants[i], c.package);
      c.exact = true;
    }
  return out;
}

double report_welfare(const InferredValueTable& table, const Matrix& gamma, std::span<const std::size_t> selection) {
  const std::size_t m = gamma.rows();
  Vector total(m, 0.0);
  double v = 0.0;
  for (std::size_t i = 0; i < table.n(); ++i) {
    const Candidate& c = table.candidates[i].at(selection[i]);
    v += c.value;
    for (std::size_t j = 0; j < m; ++j) total[j] += c.package[j];
  }
  return v - 0.5 * quad_form(gamma, total);
}

namespace {

WdpSolution finish(const InferredValueTable& table, const Matrix& gamma, std::vector<std::size_t> sel) {
  WdpSolution out;
  out.reported_welfare = report_welfare(table, gamma, sel);
  for (std::size_t i = 0; i < table.n(); ++i) out.trades.push_back(table.candidates[i][sel[i]].package);
  out.selection = std::move(sel);
  return out;
}

void check_table(const InferredValueTable& table, const Matrix& gamma) {
  if (table.n() == 0) throw ContractViolation("solve_wdp: empty table");
  for (const auto& k : table.candidates) {
    if (k.empty()) throw ContractViolation("solve_wdp: participant without candidates");
    for (const auto& c : k)
      if (c.package.size() != gamma.rows()) throw ContractViolation("solve_wdp: package dimension");
  }
}

}  // namespace

namespace {

// Candidates flattened to one index with pairwise cross terms q_a' G q_b, so
// partial welfare updates cost O(candidates) rather than O(m^2).
struct FlatTable {
  std::vector<std::size_t> offset;  // first flat index of each participant
  std::vector<double> value;
  std::vector<double> cross;        // row-major N x N
  std::size_t size = 0;

  FlatTable(const InferredValueTable& table, const Matrix& gamma) {
    std::vector<Vector> gq;
    std::vector<const Vector*> q;
    for (const auto& k : table.candidates) {
      offset.push_back(size);
      for (const auto& c : k) {
        value.push_back(c.value);
        q.push_back(&c.package);
        gq.push_back(matvec(gamma, c.package));
        ++size;
      }
    }
    offset.push_back(size);
    cross.resize(size * size);
    for (std::size_t a = 0; a < size; ++a)
      for (std::size_t b = a; b < size; ++b) cross[a * size + b] = cross[b * size + a] = dot(gq[a], *q[b]);
  }

  std::size_t count(std::size_t i) const { return offset[i + 1] - offset[i]; }
  // lin[a] = q_a' G s for the current partial sum s.
  void add(const std::vector<double>& lin, std::size_t b, std::vector<double>& out) const {
    const double* row = &cross[b * size];
    for (std::size_t a = 0; a < size; ++a) out[a] = lin[a] + row[a];
  }
  double gain(const std::vector<double>& lin, std::size_t a) const {
    return value[a] - lin[a] - 0.5 * cross[a * size + a];
  }
};

double near_slack(double w) { return 1e-9 * (1.0 + std::abs(w)); }

}  // namespace

WdpSolution solve_wdp_enumeration(const InferredValueTable& table, const Matrix& gamma) {
  check_table(table, gamma);
  const std::size_t n = table.n();
  const FlatTable flat(table, gamma);
  std::vector<std::vector<double>> lin(n + 1, std::vector<double>(flat.size, 0.0));
  std::vector<std::size_t> sel(n, 0);
  std::vector<std::size_t> best = sel;
  double best_w = report_welfare(table, gamma, sel);
  std::size_t visited = 0;

  // Lexicographic traversal; the incremental value only screens leaves and
  // the canonical report_welfare decides, so strict > keeps the first best.
  auto dfs = [&](auto&& self_ref, std::size_t depth, double partial) -> void {
    if (depth == n) {
      ++visited;
      if (partial < best_w - near_slack(best_w)) return;
      const double w = report_welfare(table, gamma, sel);
      if (w > best_w) {
        best_w = w;
        best = sel;
      }
      return;
    }
    for (std::size_t r = 0; r < flat.count(depth); ++r) {
      const std::size_t a = flat.offset[depth] + r;
      sel[depth] = r;
      flat.add(lin[depth], a, lin[depth + 1]);
      self_ref(self_ref, depth + 1, partial + flat.gain(lin[depth], a));
    }
    sel[depth] = 0;
  };
  dfs(dfs, 0, 0.0);
  WdpSolution out = finish(table, gamma, best);
  out.nodes = visited;
  return out;
}

WdpSolution solve_wdp_branch_and_bound(const InferredValueTable& table, const Matrix& gamma,
                                       std::size_t node_limit) {
  check_table(table, gamma);
  const std::size_t n = table.n();
  const FlatTable flat(table, gamma);

  // Branch on participants with the widest value spread first.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> spread(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : table.candidates[i]) {
      lo = std::min(lo, c.value);
      hi = std::max(hi, c.value);
    }
    spread[i] = hi - lo;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return spread[a] > spread[b]; });

  std::vector<std::vector<double>> lin(n + 1, std::vector<double>(flat.size, 0.0));
  std::vector<std::size_t> sel(n, 0);
  std::vector<std::size_t> best(n, 0);
  double best_w = report_welfare(table, gamma, best);
  std::size_t nodes = 0;
  bool truncated = false;

  // W = sum v - 0.5 s_F' G s_F - s_F' G s_R - 0.5 s_R' G s_R; dropping the
  // last term leaves a valid bound that is separable over free participants.
  auto bound = [&](std::size_t depth, double fixed) {
    double b = fixed;
    const auto& l = lin[depth];
    for (std::size_t d = depth; d < n; ++d) {
      const std::size_t i = order[d];
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t a = flat.offset[i]; a < flat.offset[i + 1]; ++a) top = std::max(top, flat.value[a] - l[a]);
      b += top;
    }
    return b;
  };

  auto lex_less = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };

  // fixed = sum of fixed values - 0.5 s' G s
  auto dfs = [&](auto&& self_ref, std::size_t depth, double fixed) -> void {
    if (truncated) return;
    if (++nodes > node_limit) {
      truncated = true;
      return;
    }
    if (depth == n) {
      if (fixed < best_w - near_slack(best_w)) return;
      const double w = report_welfare(table, gamma, sel);
      if (w > best_w || (w == best_w && lex_less(sel, best))) {
        best_w = w;
        best = sel;
      }
      return;
    }
    if (bound(depth, fixed) < best_w - near_slack(best_w)) return;
    const std::size_t i = order[depth];
    const std::size_t k = flat.count(i);
    std::vector<double> gain(k);
    for (std::size_t r = 0; r < k; ++r) gain[r] = flat.gain(lin[depth], flat.offset[i] + r);
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
    for (std::size_t r : idx) {
      sel[i] = r;
      flat.add(lin[depth], flat.offset[i] + r, lin[depth + 1]);
      self_ref(self_ref, depth + 1, fixed + gain[r]);
    }
    sel[i] = 0;
  };
  dfs(dfs, 0, 0.0);

  WdpSolution out = finish(table, gamma, best);
  out.exact = !truncated;
  out.nodes = nodes;
  return out;
}

WdpSolution solve_wdp(const InferredValueTable& table, const Matrix& gamma, const WdpOptions& opts) {
  if (!opts.force_branch_and_bound && table.combinations() <= opts.enumeration_limit)
    return solve_wdp_enumeration(table, gamma);
  return solve_wdp_branch_and_bound(table, gamma, opts.node_limit);
}

bool final_vs_incumbent_check(const EconomyCell& cell, const std::vector<Vector>& final_trades,
                              const std::vector<Vector>& dq_trades) {
  return welfare(cell, final_trades) >= welfare(cell, dq_trades) - 1e-9;
}

DualValue true_dual(const EconomyCell& cell, std::span<const double> price) {
  if (price.size() != cell.m()) throw ContractViolation("true_dual: price dimension");
  DualValue out;
  QpOptions qo;
  qo.tol = 1e-14;
  for (const auto& p : cell.participants) {
    Vector d = solve_concave_qp(p.theta, p.H, price, p.feasible, qo).x;
    out.value += value(p, d) - dot(price, d);
    out.demands.push_back(std::move(d));
  }
  out.value += 0.5 * quad_form(cell.market->Gamma_inv, price);
  return out;
}

DualCertificate certificate(const EconomyCell& cell, std::span<const double> price,
                            const std::vector<Vector>& verified_trades) {
  DualCertificate c;
  c.price.assign(price.begin(), price.end());
  c.dual = true_dual(cell, price).value;
  c.welfare = welfare(cell, verified_trades);
  c.gap = c.dual - c.welfare;
  return c;
}

std::string table_to_json(const InferredValueTable& table) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& k : table.candidates) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : k) row.push_back({{"package", c.package}, {"value", c.value}, {"exact", c.exact}});
    j.push_back(row);
  }
  return j.dump();
}

InferredValueTable table_from_json(const std::string& text) {
  InferredValueTable t;
  const auto j = nlohmann::json::parse(text);
  for (const auto& row : j) {
    std::vector<Candidate> k;
    for (const auto& c : row)
      k.push_back({c.at("package").get<Vector>(), c.at("value").get<double>(), c.at("exact").get<bool>()});
    t.candidates.push_back(std::move(k));
  }
  return t;
}

}  // namespace qcross
