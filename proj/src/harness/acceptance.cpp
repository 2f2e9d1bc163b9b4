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

#include "qcross/harness/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "qcross/allocation/allocation.hpp"
#include "qcross/economy/economy.hpp"
#include "qcross/harness/experiment.hpp"
#include "qcross/harness/metrics.hpp"
#include "qcross/market/market_model.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/format.hpp"
#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/projection.hpp"
#include "qcross/numerics/qp.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {
namespace {

constexpr double kAlpha = 0.05;

Vector normals(std::size_t n, double scale, CounterRng& rng) {
  Vector v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

Matrix random_psd(std::size_t n, double ridge, CounterRng& rng) {
  Matrix b(n, n);
  for (auto& x : b.data()) x = rng.normal();
  Matrix h = matmul_tn(b, b);
  for (std::size_t i = 0; i < n; ++i) h(i, i) += ridge;
  return symmetrized(h);
}

Vector random_feasible(std::size_t n, const FeasibleSet& s, CounterRng& rng) {
  Vector z = project_l1_box(normals(n, s.gross_cap, rng), s);
  const double u = rng.uniform();
  for (auto& x : z) x *= u;
  return z;
}

// Pattern search over the feasible set with moves +-h e_i and
// +-h e_i +-h e_j at h = 0.1 down to 1e-4.
template <class Score>
Vector lattice_search(std::size_t n, const FeasibleSet& s, Score score) {
  Vector best(n, 0.0);
  double best_score = score(best);
  for (double h : {0.1, 0.01, 0.001, 0.0001}) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
          for (int si : {-1, 1})
            for (int sj : {-1, 0, 1}) {
              if ((j == i) != (sj == 0)) continue;
              Vector c = best;
              c[i] += si * h;
              if (j != i) c[j] += sj * h;
              if (!s.contains(c, 1e-12)) continue;
              const double sc = score(c);
              if (sc > best_score + 1e-15) {
                best = std::move(c);
                best_score = sc;
                improved = true;
              }
            }
    }
  }
  return best;
}

std::string pp(double x) { return fmt_sig(100.0 * x, 4) + " pp"; }

// Experiments on one shared set of matched cells; each config runs once.
class Runs {
 public:
  explicit Runs(const AcceptanceOptions& o) : opts_(o) {}

  const std::vector<EconomyCell>& cells() {
    if (cells_.empty()) {
      ExperimentConfig cfg;
      cfg.cells = opts_.cells;
      cfg.seed = opts_.seed;
      cells_ = build_cells(build_markets(cfg.markets), cfg, opts_.parallel);
    }
    return cells_;
  }

  const std::vector<CellResult>& run(const std::vector<ProtocolConfig>& cfgs) {
    std::vector<ProtocolConfig> todo;
    for (const auto& c : cfgs)
      if (done_.insert(c.label).second) todo.push_back(c);
    if (!todo.empty()) {
      RunOptions ro;
      ro.parallel = opts_.parallel;
      auto res = run_matched_experiment(todo, cells(), ro);
      for (auto& r : res.rows) rows_.push_back(std::move(r));
    }
    return rows_;
  }

  PairedTest paired(const std::string& a, const std::string& b) {
    const PairedSample s = paired_efficiency(rows_, a, b);
    if (s.diffs.empty()) throw ContractViolation("acceptance: no paired cells for " + a + " and " + b);
    std::uint64_t h = opts_.seed;
    for (char ch : a + "|" + b) h = mix64(h ^ static_cast<unsigned char>(ch));
    return paired_bootstrap_test(s.diffs, s.strata, opts_.bootstrap_reps, h, opts_.parallel);
  }

  BootstrapSummary summary(const std::string& config) {
    std::vector<double> v;
    std::vector<std::string> s;
    for (const auto& r : rows_)
      if (r.config == config && std::isfinite(r.efficiency)) {
        v.push_back(r.efficiency);
        s.push_back(r.market);
      }
    if (v.empty()) throw ContractViolation("acceptance: no usable cells for " + config);
    std::uint64_t h = opts_.seed;
    for (char ch : config) h = mix64(h ^ static_cast<unsigned char>(ch));
    return stratified_bootstrap(v, s, opts_.bootstrap_reps, h, opts_.parallel);
  }

  double mean_leakage(const std::string& config, const LeakageConfig& leak) const {
    double t = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows_)
      if (r.config == config && std::isfinite(r.efficiency)) {
        t += weighted_leakage(r, leak);
        ++n;
      }
    return n ? t / static_cast<double>(n) : std::nan("");
  }

  const AcceptanceOptions& opts() const { return opts_; }

 private:
  AcceptanceOptions opts_;
  std::vector<EconomyCell> cells_;
  std::vector<CellResult> rows_;
  std::set<std::string> done_;
};

ProtocolConfig hybrid(const std::string& label, std::size_t q, FamilyKind family = FamilyKind::kFC,
                      bool bridge = true, double rho = 0.35) {
  ProtocolConfig c;
  c.label = label;
  c.protocol = Protocol::kHY;
  c.family = family;
  c.total_budget = q;
  c.dq_rounds = (2 * q + 1) / 3;
  c.bridge = bridge;
  c.rho_dq = rho;
  return c;
}

ProtocolConfig one_sided(const std::string& label, Protocol p, std::size_t q) {
  ProtocolConfig c;
  c.label = label;
  c.protocol = p;
  c.total_budget = q;
  c.dq_rounds = p == Protocol::kVO ? 0 : q;
  c.bridge = false;
  return c;
}

std::string rho_label(double rho) { return fmt_sig(rho, 3); }

// ---- criteria ---------------------------------------------------------------

CriterionResult identities(Runs&) {
  CriterionResult r{1, "identity suite", true, "", 0.0};
  const auto mm = std::make_shared<const MarketModel>(synthetic_market({}, {}, 101, "A"));
  CounterRng rng(11, {1});
  double worst_comp = 0.0;
  for (const auto& prof : default_profiles())
    for (int rep = 0; rep < 1000; ++rep) {
      const Participant p = draw_participant(prof, *mm, 0.5, 1, {}, rng);
      const Vector g = normals(mm->m, 0.2, rng), h = normals(mm->m, 0.2, rng);
      const double vgh = value(p, add(g, h));
      const double lhs = vgh - value(p, g) - value(p, h);
      worst_comp = std::max(worst_comp, std::abs(lhs + dot(g, matvec(p.H, h))) / (1.0 + std::abs(vgh)));
    }
  double worst_gap = 0.0;
  for (int c = 0; c < 20; ++c) {
    const EconomyCell cell = make_cell(mm, {}, 500 + static_cast<std::uint64_t>(c));
    for (int rep = 0; rep < 10; ++rep) {
      const Vector p = normals(mm->m, rng.uniform(0.01, 0.5), rng);
      const DualValue dv = true_dual(cell, p);
      Vector xi(mm->m, 0.0);
      for (const auto& d : dv.demands) xi = sub(xi, d);
      const double gap = dv.value - welfare(cell, dv.demands);
      const double formula = 0.5 * quad_form(mm->Gamma, add(xi, matvec(mm->Gamma_inv, p)));
      worst_gap = std::max(worst_gap, std::abs(gap - formula) / (1.0 + std::abs(formula)));
    }
  }
  double worst_fenchel = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector xi = normals(mm->m, 1.0, rng), p = normals(mm->m, 1.0, rng);
    const double lhs = residual_cost(xi, mm->Gamma) + conjugate_cost(scaled(p, -1.0), mm->Gamma_inv) + dot(p, xi);
    worst_fenchel = std::min(worst_fenchel, lhs);
  }
  r.pass = worst_comp <= 1e-10 && worst_gap <= 1e-8 && worst_fenchel >= -1e-12;
  r.detail = "complementarity rel err " + fmt_sig(worst_comp, 3) + " (<= 1e-10), gap formula rel err " +
             fmt_sig(worst_gap, 3) + " (<= 1e-8), min Fenchel slack " + fmt_sig(worst_fenchel, 3);
  return r;
}

CriterionResult weak_duality(Runs&) {
  CriterionResult r{2, "weak duality", true, "", 0.0};
  const auto mm = std::make_shared<const MarketModel>(synthetic_market({}, {}, 102, "B"));
  CounterRng rng(12, {2});
  double worst = -1e300;
  std::size_t violations = 0;
  for (int c = 0; c < 20; ++c) {
    EconomyCell cell = make_cell(mm, {}, 700 + static_cast<std::uint64_t>(c));
    const double w_star = ensure_oracle(cell).welfare;
    for (int rep = 0; rep < 10; ++rep) {
      const Vector p = normals(mm->m, rng.uniform(0.01, 0.5), rng);
      const double excess = w_star - true_dual(cell, p).value;
      worst = std::max(worst, excess);
      if (excess > 1e-8) ++violations;
    }
  }
  r.pass = violations == 0;
  r.detail = std::to_string(violations) + "/200 violations, max W* - dual " + fmt_sig(worst, 3);
  return r;
}

CriterionResult incumbent(Runs& runs) {
  CriterionResult r{3, "incumbent preservation", true, "", 0.0};
  std::vector<ProtocolConfig> cfgs;
  for (double rho : {0.10, 0.35, 0.50, 1.0}) cfgs.push_back(hybrid("BR-" + rho_label(rho), 18, FamilyKind::kFC, true, rho));
  const auto& rows = runs.run(cfgs);
  std::size_t n = 0, ok = 0;
  for (const auto& row : rows) {
    if (row.config.rfind("BR-", 0) != 0 || !std::isfinite(row.w_star) || row.w_star <= kMinOracleWelfare) continue;
    ++n;
    if (row.error.empty() && row.incumbent_ok && row.welfare >= row.dq_welfare - 1e-9) ++ok;
  }
  r.pass = n > 0 && ok == n;
  r.detail = std::to_string(ok) + "/" + std::to_string(n) + " bridged runs keep W(final) >= W(a_dq) - 1e-9";
  return r;
}

CriterionResult wdp(Runs&) {
  CriterionResult r{4, "WDP correctness", true, "", 0.0};
  CounterRng rng(14, {4});
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 1 + rng.index(6), m = 1 + rng.index(5);
    InferredValueTable t;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Candidate> k{{Vector(m, 0.0), 0.0, true}};
      const std::size_t extra = rng.index(6);
      for (std::size_t c = 0; c < extra; ++c) k.push_back({normals(m, 0.5, rng), rng.normal() * 0.3, false});
      t.candidates.push_back(std::move(k));
    }
    Matrix g = scaled(random_psd(m, 0.0, rng), 1.0 / static_cast<double>(m));
    for (std::size_t i = 0; i < m; ++i) g(i, i) += 0.1;
    const auto e = solve_wdp_enumeration(t, g);
    const auto b = solve_wdp_branch_and_bound(t, g);
    if (!b.exact || b.selection != e.selection || b.reported_welfare != e.reported_welfare) ++mismatches;
  }
  r.pass = mismatches == 0;
  r.detail = std::to_string(mismatches) + "/500 instances differ from enumeration";
  return r;
}

CriterionResult solver(Runs&) {
  CriterionResult r{5, "solver correctness", true, "", 0.0};
  CounterRng rng(15, {5});
  double worst_rp = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.index(19);
    const FeasibleSet s{rng.uniform(0.3, 1.5), rng.uniform(0.05, 0.4)};
    const Matrix h = random_psd(n, 0.05, rng);
    const Vector theta = normals(n, 2.0, rng), p = normals(n, 0.5, rng);
    const QpResult q = solve_concave_qp(theta, h, p, s);
    for (int c = 0; c < 1000; ++c) {
      const Vector d = random_feasible(n, s, rng);
      worst_rp = std::max(worst_rp, concave_objective(theta, h, p, d) - q.objective);
    }
  }
  double worst_proj = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const FeasibleSet s{rng.uniform(0.3, 1.5), rng.uniform(0.1, 0.6)};
    const Vector x = normals(5, 1.0, rng);
    const Vector y = project_l1_box(x, s);
    const Vector g = lattice_search(5, s, [&](const Vector& c) {
      const Vector d = sub(x, c);
      return -dot(d, d);
    });
    worst_proj = std::max(worst_proj, norm2(sub(y, g)));
  }
  r.pass = worst_rp <= 1e-6 && worst_proj <= 2e-3;
  r.detail = "max revealed-preference violation " + fmt_sig(worst_rp, 3) + " (<= 1e-6), projection vs grid " +
             fmt_sig(worst_proj, 3) + " (<= 2e-3)";
  return r;
}

CriterionResult architecture(Runs& runs) {
  CriterionResult r{6, "architecture ordering", true, "", 0.0};
  runs.run({hybrid("HY-Q18", 18), one_sided("VO-Q18", Protocol::kVO, 18), one_sided("DO-Q18", Protocol::kDO, 18)});
  std::vector<PairedTest> t = {runs.paired("VO-Q18", "HY-Q18"), runs.paired("DO-Q18", "HY-Q18")};
  holm_adjust(t);
  r.pass = t[0].mean_diff >= 0.15 && t[1].mean_diff >= 0.15 && t[0].p_holm < kAlpha && t[1].p_holm < kAlpha;
  r.detail = "HY " + pp(runs.summary("HY-Q18").mean) + ", HY-VO " + pp(t[0].mean_diff) + " (p_holm " +
             format_p(t[0]) + "), HY-DO " + pp(t[1].mean_diff) + " (p_holm " + format_p(t[1]) + ")";
  return r;
}

CriterionResult budget(Runs& runs) {
  CriterionResult r{7, "budget scaling", true, "", 0.0};
  const std::vector<std::size_t> qs = {8, 18, 32, 48};
  std::vector<ProtocolConfig> cfgs;
  for (std::size_t q : qs) {
    cfgs.push_back(hybrid("HY-Q" + std::to_string(q), q));
    cfgs.push_back(one_sided("VO-Q" + std::to_string(q), Protocol::kVO, q));
  }
  runs.run(cfgs);
  std::vector<BootstrapSummary> hy;
  for (std::size_t q : qs) hy.push_back(runs.summary("HY-Q" + std::to_string(q)));
  bool monotone = true;
  std::ostringstream os;
  os << "HY";
  for (std::size_t k = 0; k < qs.size(); ++k) {
    os << (k ? ", " : " ") << "Q" << qs[k] << " " << fmt_sig(100.0 * hy[k].mean, 4) << "+-"
       << fmt_sig(100.0 * hy[k].half_width, 3);
    if (k > 0 && hy[k].mean < hy[k - 1].mean - std::max(hy[k].half_width, hy[k - 1].half_width)) monotone = false;
  }
  const double adv8 = runs.paired("VO-Q8", "HY-Q8").mean_diff;
  const double adv48 = runs.paired("VO-Q48", "HY-Q48").mean_diff;
  r.pass = monotone && adv48 > adv8;
  os << "; HY-VO at Q8 " << pp(adv8) << ", at Q48 " << pp(adv48);
  r.detail = os.str();
  return r;
}

CriterionResult bridge(Runs& runs) {
  CriterionResult r{8, "bridge advantage", true, "", 0.0};
  const std::vector<double> rhos = {0.10, 0.35, 0.50};
  std::vector<ProtocolConfig> cfgs;
  for (double rho : rhos) {
    cfgs.push_back(hybrid("BR-" + rho_label(rho), 18, FamilyKind::kFC, true, rho));
    cfgs.push_back(hybrid("NB-" + rho_label(rho), 18, FamilyKind::kFC, false, rho));
  }
  runs.run(cfgs);
  std::vector<PairedTest> t;
  for (double rho : rhos) t.push_back(runs.paired("NB-" + rho_label(rho), "BR-" + rho_label(rho)));
  holm_adjust(t);
  std::ostringstream os;
  for (std::size_t k = 0; k < rhos.size(); ++k) {
    if (!(t[k].mean_diff > 0.0 && t[k].p_holm < kAlpha)) r.pass = false;
    os << (k ? ", " : "") << "rho " << rho_label(rhos[k]) << ": BR-NB " << pp(t[k].mean_diff) << " (p_holm "
       << format_p(t[k]) << ")";
  }
  r.detail = os.str();
  return r;
}

CriterionResult diagnostic(Runs& runs) {
  CriterionResult r{9, "diagnostic ordering", true, "", 0.0};
  const auto& cells = runs.cells();
  const std::vector<double> rhos = {0.10, 0.35, 0.70, 1.0};
  ProtocolConfig cfg = one_sided("DIAG", Protocol::kDO, 18);
  std::vector<std::vector<DiagnosticRow>> out(cells.size());
  const long total = static_cast<long>(cells.size());
  const auto one = [&](long c) {
    const auto& cell = cells[static_cast<std::size_t>(c)];
    if (cell.oracle && cell.oracle->welfare > kMinOracleWelfare) out[static_cast<std::size_t>(c)] = diagnostic_accounting(cell, cfg, rhos);
  };
  if (runs.opts().parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long c = 0; c < total; ++c) one(c);
  } else {
    for (long c = 0; c < total; ++c) one(c);
  }
  // Rows: primitive, bridge_extra, bridge_within, then one per rho.
  std::vector<double> mean(3 + rhos.size(), 0.0);
  std::size_t n = 0, dominance = 0, monotone = 0;
  for (const auto& rows : out) {
    if (rows.empty()) continue;
    ++n;
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += rows[k].efficiency;
    bool dom = true, mono = true;
    for (std::size_t k = 3; k < rows.size(); ++k) {
      if (rows[0].efficiency < rows[k].efficiency - 1e-9) dom = false;
      if (k > 3 && rows[k].efficiency < rows[k - 1].efficiency - 1e-9) mono = false;
    }
    dominance += dom;
    monotone += mono;
  }
  for (auto& m : mean) m /= static_cast<double>(std::max<std::size_t>(n, 1));
  const double best_rp = *std::max_element(mean.begin() + 3, mean.end());
  const bool means = mean[0] >= std::max(mean[1], mean[2]) && std::min(mean[1], mean[2]) >= best_rp;
  r.pass = n > 0 && dominance == n && monotone == n && means;
  std::ostringstream os;
  os << "means: primitive " << fmt_sig(100 * mean[0], 4) << ", bridge_extra " << fmt_sig(100 * mean[1], 4)
     << ", bridge_within " << fmt_sig(100 * mean[2], 4);
  for (std::size_t k = 0; k < rhos.size(); ++k)
    os << ", rp_" << rho_label(rhos[k]) << " " << fmt_sig(100 * mean[3 + k], 4);
  os << "; per-cell dominance " << dominance << "/" << n << ", rho monotone " << monotone << "/" << n;
  r.detail = os.str();
  return r;
}

CriterionResult completion(Runs& runs) {
  CriterionResult r{10, "completion robustness", true, "", 0.0};
  runs.run({hybrid("HY-Q18", 18), hybrid("HY-NC", 18, FamilyKind::kNC)});
  std::vector<PairedTest> family = {runs.paired("HY-NC", "HY-Q18")};
  holm_adjust(family);
  const PairedTest& t = family.front();
  r.pass = t.mean_diff > 0.0 && t.p_holm < kAlpha;
  r.detail = "FC " + pp(runs.summary("HY-Q18").mean) + ", NC " + pp(runs.summary("HY-NC").mean) + ", FC-NC " +
             pp(t.mean_diff) + " (p_holm " + format_p(t) + ")";
  return r;
}

CriterionResult crossover(Runs& runs) {
  CriterionResult r{11, "frontier crossover", true, "", 0.0};
  runs.run({hybrid("HY-Q18", 18), hybrid("HY-SL", 18, FamilyKind::kSL)});
  const LeakageConfig leak;  // active pair, omega_FC = 0.45
  const double eff_fc = runs.summary("HY-Q18").mean, eff_sl = runs.summary("HY-SL").mean;
  const double l_fc = runs.mean_leakage("HY-Q18", leak), l_sl = runs.mean_leakage("HY-SL", leak);
  std::ostringstream os;
  os << "Eff_FC " << fmt_sig(eff_fc, 4) << ", Eff_SL " << fmt_sig(eff_sl, 4) << ", L_FC " << fmt_sig(l_fc, 4)
     << ", L_SL " << fmt_sig(l_sl, 4);
  // The difference identity on random inputs.
  CounterRng rng(16, {11});
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double ea = rng.uniform(), eb = rng.uniform(), la = rng.uniform(0.0, 0.5);
    const double lb = la + rng.uniform(0.01, 0.5), c = rng.uniform();
    const double lhs = adjusted_welfare(eb, c, lb) - adjusted_welfare(ea, c, la);
    const double rhs = 100.0 * (lb - la) * (break_even(ea, eb, la, lb) - c);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  const bool identity = worst <= 1e-12;
  os << "; identity err " << fmt_sig(worst, 3);
  const bool precondition = eff_sl > eff_fc && l_sl > l_fc;
  bool flips = false;
  if (precondition) {
    const double c_star = break_even(eff_fc, eff_sl, l_fc, l_sl);
    const auto sl_ahead = [&](double c) {
      return adjusted_welfare(eff_sl, c, l_sl) > adjusted_welfare(eff_fc, c, l_fc);
    };
    flips = c_star > 0.0 && c_star < 1.0 && sl_ahead(c_star - 0.05) && !sl_ahead(c_star + 0.05);
    os << "; c* " << fmt_sig(c_star, 4);
  } else {
    os << "; precondition Eff_SL > Eff_FC and L_SL > L_FC not met";
  }
  r.pass = precondition && flips && identity;
  r.detail = os.str();
  return r;
}

CriterionResult determinism(Runs& runs) {
  CriterionResult r{12, "determinism", true, "", 0.0};
  namespace fs = std::filesystem;
  const fs::path base = runs.opts().work_dir.empty() ? fs::temp_directory_path() / "qcross-acceptance"
                                                     : runs.opts().work_dir;
  ExperimentConfig cfg;
  cfg.cells = 6;
  cfg.seed = runs.opts().seed;
  cfg.bootstrap_reps = 200;
  cfg.trace = true;
  cfg.protocols = {hybrid("HY", 18), one_sided("VO", Protocol::kVO, 18)};
  std::vector<std::string> files;
  int k = 0;
  for (bool parallel : {true, true, false}) {
    const fs::path dir = base / ("run" + std::to_string(k++));
    fs::create_directories(dir);
    simulate(cfg, dir, parallel);
    files.push_back(read_text(dir / "cells.csv") + read_text(dir / "trace.jsonl"));
  }
  const bool repeat = files[0] == files[1];
  const bool serial = files[0] == files[2];
  r.pass = repeat && serial && !files[0].empty();
  r.detail = std::string("repeat run ") + (repeat ? "identical" : "differs") + ", serial run " +
             (serial ? "identical" : "differs") + " (cells.csv and trace.jsonl)";
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  using Fn = CriterionResult (*)(Runs&);
  const std::vector<Fn> all = {identities, weak_duality, incumbent,  wdp,        solver,    architecture,
                               budget,     bridge,       diagnostic, completion, crossover, determinism};
  static const char* names[] = {"identity suite",        "weak duality",         "incumbent preservation",
                                "WDP correctness",       "solver correctness",   "architecture ordering",
                                "budget scaling",        "bridge advantage",     "diagnostic ordering",
                                "completion robustness", "frontier crossover",   "determinism"};
  Runs runs(opts);
  std::vector<CriterionResult> out;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = all[k](runs);
    } catch (const std::exception& e) {
      r = {id, names[k], false, std::string("error: ") + e.what(), 0.0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_criterion(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail << " ("
     << fmt_sig(r.seconds, 3) << " s)";
  return os.str();
}

}  // namespace qcross
