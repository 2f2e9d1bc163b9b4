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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "qcross/harness/experiment.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/format.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {

double weighted_leakage(const CellResult& r, const LeakageConfig& leak) {
  const double raw = select_leakage(r.leakage, leak.metric);
  if (!std::isfinite(raw)) return raw;
  return std::min(1.0, leak.omega_for(r.family) * raw);
}

namespace {

bool is_diagnostic(const CellResult& r) { return r.config.rfind("DIAG:", 0) == 0; }

// Distinct config labels in first-appearance order.
std::vector<std::string> config_order(const std::vector<CellResult>& rows) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : rows)
    if (seen.insert(r.config).second) out.push_back(r.config);
  return out;
}

std::vector<const CellResult*> usable(const std::vector<CellResult>& rows, const std::string& config,
                                      double zeta = std::nan("")) {
  std::vector<const CellResult*> out;
  for (const auto& r : rows)
    if (r.config == config && std::isfinite(r.efficiency) && (std::isnan(zeta) || r.zeta_contra == zeta))
      out.push_back(&r);
  return out;
}

std::uint64_t label_seed(std::uint64_t seed, const std::string& a, const std::string& b = {}) {
  std::uint64_t h = 0;
  for (char ch : a + "|" + b) h = mix64(h ^ static_cast<unsigned char>(ch));
  return derive_key(seed, {h});
}

BootstrapSummary eff_summary(const std::vector<const CellResult*>& rs, std::size_t reps, std::uint64_t seed) {
  if (rs.empty()) return {};
  std::vector<double> v;
  std::vector<std::string> s;
  for (const auto* r : rs) {
    v.push_back(r->efficiency);
    s.push_back(r->market);
  }
  return stratified_bootstrap(v, s, reps, seed);
}

double mean_of(const std::vector<const CellResult*>& rs, double CellResult::*field) {
  double t = 0.0;
  std::size_t n = 0;
  for (const auto* r : rs)
    if (std::isfinite(r->*field)) {
      t += r->*field;
      ++n;
    }
  return n ? t / static_cast<double>(n) : std::nan("");
}

double mean_leak(const std::vector<const CellResult*>& rs, const LeakageConfig& leak) {
  double t = 0.0;
  std::size_t n = 0;
  for (const auto* r : rs) {
    const double l = weighted_leakage(*r, leak);
    if (std::isfinite(l)) {
      t += l;
      ++n;
    }
  }
  return n ? t / static_cast<double>(n) : std::nan("");
}

PairedSample paired_at(const std::vector<CellResult>& rows, const std::string& a, const std::string& b,
                       double zeta = std::nan("")) {
  std::map<std::pair<std::size_t, double>, const CellResult*> ra;
  for (const auto* r : usable(rows, a, zeta)) ra[{r->cell, r->zeta_contra}] = r;
  PairedSample out;
  for (const auto* r : usable(rows, b, zeta)) {
    const auto it = ra.find({r->cell, r->zeta_contra});
    if (it == ra.end()) continue;
    out.diffs.push_back(r->efficiency - it->second->efficiency);
    out.strata.push_back(r->market);
  }
  return out;
}

PairedTest paired(const std::vector<CellResult>& rows, const std::string& a, const std::string& b, std::size_t reps,
                  std::uint64_t seed) {
  const PairedSample s = paired_at(rows, a, b);
  if (s.diffs.empty()) {
    PairedTest t;
    t.mean_diff = std::nan("");
    t.p_value = t.p_holm = std::nan("");
    return t;
  }
  return paired_bootstrap_test(s.diffs, s.strata, reps, label_seed(seed, a, b));
}

std::string pct(double x) { return fmt_sig(100.0 * x, 6); }
std::string num(double x) { return fmt_sig(x, 6); }

// Holm over the tests that actually ran.
void holm_finite(std::vector<PairedTest*> tests) {
  std::vector<PairedTest> live;
  std::vector<PairedTest*> where;
  for (auto* t : tests)
    if (std::isfinite(t->p_value)) {
      live.push_back(*t);
      where.push_back(t);
    }
  holm_adjust(live);
  for (std::size_t i = 0; i < live.size(); ++i) where[i]->p_holm = live[i].p_holm;
}

std::string p_text(const PairedTest& t) { return std::isfinite(t.p_value) ? format_p(t) : "nan"; }

const CellResult* first_row(const std::vector<CellResult>& rows, const std::string& config) {
  for (const auto& r : rows)
    if (r.config == config) return &r;
  return nullptr;
}

bool baseline_conditions(const CellResult& r) {
  return r.misspecification == 0.0 && r.min_l1 == 0.0 && r.response == "exact";
}

// Everything but the family and the bridge flag.
auto design_key(const CellResult& r) {
  return std::make_tuple(r.protocol, r.total_budget, r.dq_rounds, r.rho_dq, r.response, r.misspecification, r.min_l1);
}

}  // namespace

PairedSample paired_efficiency(const std::vector<CellResult>& rows, const std::string& config_a,
                               const std::string& config_b) {
  return paired_at(rows, config_a, config_b);
}

std::vector<ConfigSummary> summarize(const std::vector<CellResult>& rows, const LeakageConfig& leak, std::size_t reps,
                                     std::uint64_t seed) {
  const std::vector<std::string> configs = config_order(rows);
  std::vector<ConfigSummary> out;
  for (const auto& c : configs) {
    ConfigSummary s;
    s.config = c;
    const auto rs = usable(rows, c);
    s.n = rs.size();
    s.efficiency = eff_summary(rs, reps, label_seed(seed, c));
    s.residual_l1 = mean_of(rs, &CellResult::residual_l1);
    s.crossed_notional = mean_of(rs, &CellResult::crossed_notional);
    s.leakage = mean_leak(rs, leak);
    if (out.empty() || c.rfind("DIAG:", 0) == 0) {
      s.vs_reference.reps = reps;
      if (!out.empty()) s.vs_reference.mean_diff = s.vs_reference.p_value = s.vs_reference.p_holm = std::nan("");
    } else {
      s.vs_reference = paired(rows, configs.front(), c, reps, seed);
    }
    out.push_back(std::move(s));
  }
  std::vector<PairedTest*> tests;
  for (std::size_t i = 1; i < out.size(); ++i) tests.push_back(&out[i].vs_reference);
  holm_finite(tests);
  return out;
}

std::string summary_csv(const std::vector<ConfigSummary>& s) {
  std::ostringstream os;
  os << "config,n,efficiency,half_width,residual_l1,crossed_notional,leakage,diff_vs_first,diff_half_width,p_raw,"
        "p_holm,p_below_resolution,reps\n";
  for (const auto& c : s)
    os << c.config << ',' << c.n << ',' << fmt_sig(c.efficiency.mean) << ',' << fmt_sig(c.efficiency.half_width)
       << ',' << fmt_sig(c.residual_l1) << ',' << fmt_sig(c.crossed_notional) << ',' << fmt_sig(c.leakage) << ','
       << fmt_sig(c.vs_reference.mean_diff) << ',' << fmt_sig(c.vs_reference.half_width) << ','
       << fmt_sig(c.vs_reference.p_value) << ',' << fmt_sig(c.vs_reference.p_holm) << ','
       << (c.vs_reference.below_resolution ? 1 : 0) << ',' << c.vs_reference.reps << '\n';
  return os.str();
}

std::string table_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

const std::vector<std::string>& report_table_names() {
  static const std::vector<std::string> names = {"architecture", "budget",  "bridge",    "diagnostic",
                                                 "crossing",     "contra", "robustness"};
  return names;
}

namespace {

Table architecture_table(const std::vector<CellResult>& rows, std::size_t reps, std::uint64_t seed) {
  Table t;
  t.header = {"config", "protocol", "Q", "Q_dq", "Q_vq", "bridge", "n", "eff_pct", "half_width_pct",
              "diff_vs_VO_pp", "p_holm_vs_VO", "diff_vs_DO_pp", "p_holm_vs_DO"};
  struct Entry {
    const CellResult* meta;
    std::string config;
  };
  std::vector<Entry> entries;
  for (const auto& c : config_order(rows)) {
    const CellResult* m = first_row(rows, c);
    if (!m || is_diagnostic(*m) || !baseline_conditions(*m)) continue;
    if (m->protocol != "HY" && m->protocol != "VO" && m->protocol != "DO") continue;
    if (m->family != "FC") continue;
    entries.push_back({m, c});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::make_tuple(a.meta->total_budget, a.meta->dq_rounds) <
           std::make_tuple(b.meta->total_budget, b.meta->dq_rounds);
  });
  auto find = [&](const std::string& proto, std::size_t q) -> const Entry* {
    for (const auto& e : entries)
      if (e.meta->protocol == proto && e.meta->total_budget == q) return &e;
    return nullptr;
  };
  std::vector<PairedTest> vo(entries.size()), dq(entries.size());
  std::vector<PairedTest*> family;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    vo[i].p_value = dq[i].p_value = vo[i].mean_diff = dq[i].mean_diff = std::nan("");
    if (entries[i].meta->protocol != "HY") continue;
    if (const Entry* v = find("VO", entries[i].meta->total_budget)) {
      vo[i] = paired(rows, v->config, entries[i].config, reps, seed);
      family.push_back(&vo[i]);
    }
    if (const Entry* d = find("DO", entries[i].meta->total_budget)) {
      dq[i] = paired(rows, d->config, entries[i].config, reps, seed);
      family.push_back(&dq[i]);
    }
  }
  holm_finite(family);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto rs = usable(rows, e.config);
    const BootstrapSummary b = eff_summary(rs, reps, label_seed(seed, e.config));
    t.rows.push_back({e.config, e.meta->protocol, std::to_string(e.meta->total_budget),
                      std::to_string(e.meta->dq_rounds), std::to_string(e.meta->total_budget - e.meta->dq_rounds),
                      e.meta->bridge ? "1" : "0", std::to_string(rs.size()), pct(b.mean), pct(b.half_width),
                      pct(vo[i].mean_diff), p_text(vo[i]), pct(dq[i].mean_diff), p_text(dq[i])});
  }
  return t;
}

Table budget_table(const std::vector<CellResult>& rows, std::size_t reps, std::uint64_t seed) {
  Table t;
  t.header = {"Q", "HY_config", "HY_eff_pct", "HY_half_width_pct", "VO_config", "VO_eff_pct", "VO_half_width_pct",
              "advantage_pp", "p_holm"};
  // Per budget: the bridged FC hybrid whose demand share is closest to
  // two thirds, and the value-only run.
  std::map<std::size_t, std::string> hy, vo;
  for (const auto& c : config_order(rows)) {
    const CellResult* m = first_row(rows, c);
    if (!m || is_diagnostic(*m) || !baseline_conditions(*m) || m->family != "FC") continue;
    const std::size_t q = m->total_budget;
    if (m->protocol == "VO" && !vo.count(q)) vo[q] = c;
    if (m->protocol == "HY" && m->bridge) {
      const double target = 2.0 * static_cast<double>(q) / 3.0;
      const auto dist = [&](const std::string& label) {
        return std::abs(static_cast<double>(first_row(rows, label)->dq_rounds) - target);
      };
      if (!hy.count(q) || dist(c) < dist(hy[q])) hy[q] = c;
    }
  }
  std::vector<std::size_t> budgets;
  for (const auto& [q, c] : hy)
    if (vo.count(q)) budgets.push_back(q);
  std::vector<PairedTest> tests(budgets.size());
  std::vector<PairedTest*> family;
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    tests[i] = paired(rows, vo[budgets[i]], hy[budgets[i]], reps, seed);
    family.push_back(&tests[i]);
  }
  holm_finite(family);
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    const std::size_t q = budgets[i];
    const BootstrapSummary h = eff_summary(usable(rows, hy[q]), reps, label_seed(seed, hy[q]));
    const BootstrapSummary v = eff_summary(usable(rows, vo[q]), reps, label_seed(seed, vo[q]));
    t.rows.push_back({std::to_string(q), hy[q], pct(h.mean), pct(h.half_width), vo[q], pct(v.mean),
                      pct(v.half_width), pct(tests[i].mean_diff), p_text(tests[i])});
  }
  return t;
}

Table bridge_table(const std::vector<CellResult>& rows, std::size_t reps, std::uint64_t seed) {
  Table t;
  t.header = {"Q", "Q_dq", "rho_dq", "BR_config", "BR_eff_pct", "BR_half_width_pct", "NB_config", "NB_eff_pct",
              "NB_half_width_pct", "BR_minus_NB_pp", "p_holm"};
  std::vector<std::pair<std::string, std::string>> pairs;
  const auto configs = config_order(rows);
  for (const auto& b : configs) {
    const CellResult* mb = first_row(rows, b);
    if (!mb || mb->protocol != "HY" || !mb->bridge) continue;
    for (const auto& n : configs) {
      const CellResult* mn = first_row(rows, n);
      if (mn && mn->protocol == "HY" && !mn->bridge && mn->family == mb->family && design_key(*mn) == design_key(*mb)) {
        pairs.emplace_back(b, n);
        break;
      }
    }
  }
  std::vector<PairedTest> tests(pairs.size());
  std::vector<PairedTest*> family;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    tests[i] = paired(rows, pairs[i].second, pairs[i].first, reps, seed);
    family.push_back(&tests[i]);
  }
  holm_finite(family);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const CellResult* m = first_row(rows, pairs[i].first);
    const BootstrapSummary b = eff_summary(usable(rows, pairs[i].first), reps, label_seed(seed, pairs[i].first));
    const BootstrapSummary n = eff_summary(usable(rows, pairs[i].second), reps, label_seed(seed, pairs[i].second));
    t.rows.push_back({std::to_string(m->total_budget), std::to_string(m->dq_rounds), num(m->rho_dq), pairs[i].first,
                      pct(b.mean), pct(b.half_width), pairs[i].second, pct(n.mean), pct(n.half_width),
                      pct(tests[i].mean_diff), p_text(tests[i])});
  }
  return t;
}

Table diagnostic_table(const std::vector<CellResult>& rows, std::size_t reps, std::uint64_t seed) {
  Table t;
  t.header = {"rule", "total_queries", "n", "eff_pct", "half_width_pct"};
  for (const auto& c : config_order(rows)) {
    const CellResult* m = first_row(rows, c);
    if (!m || !is_diagnostic(*m)) continue;
    const auto rs = usable(rows, c);
    const BootstrapSummary b = eff_summary(rs, reps, label_seed(seed, c));
    t.rows.push_back({c.substr(5), std::to_string(m->total_budget), std::to_string(rs.size()), pct(b.mean),
                      pct(b.half_width)});
  }
  return t;
}

Table crossing_table(const std::vector<CellResult>& rows, const LeakageConfig& leak, std::size_t reps,
                     std::uint64_t seed, bool by_zeta) {
  Table t;
  t.header = {"config", "family", "min_l1"};
  if (by_zeta) t.header.push_back("zeta_contra");
  for (const char* h : {"n", "eff_pct", "half_width_pct", "residual_l1", "crossed_notional", "leakage"})
    t.header.push_back(h);
  std::set<double> zetas;
  for (const auto& r : rows) zetas.insert(r.zeta_contra);
  const std::vector<double> levels = by_zeta ? std::vector<double>(zetas.begin(), zetas.end())
                                             : std::vector<double>{std::nan("")};
  for (double z : levels)
    for (const auto& c : config_order(rows)) {
      const CellResult* m = first_row(rows, c);
      if (!m || is_diagnostic(*m) || (m->protocol != "HY" && m->protocol != "SN")) continue;
      if (m->misspecification != 0.0 || m->response != "exact") continue;
      const auto rs = usable(rows, c, z);
      if (rs.empty()) continue;
      const BootstrapSummary b = eff_summary(rs, reps, label_seed(seed, c, fmt_sig(z)));
      std::vector<std::string> row = {c, m->family, num(m->min_l1)};
      if (by_zeta) row.push_back(num(z));
      for (const std::string& x : {std::to_string(rs.size()), pct(b.mean), pct(b.half_width),
                                   num(mean_of(rs, &CellResult::residual_l1)),
                                   num(mean_of(rs, &CellResult::crossed_notional)), num(mean_leak(rs, leak))})
        row.push_back(x);
      t.rows.push_back(std::move(row));
    }
  return t;
}

Table robustness_table(const std::vector<CellResult>& rows, std::size_t reps, std::uint64_t seed) {
  Table t;
  t.header = {"config", "family", "misspecification", "response", "n", "eff_pct", "half_width_pct", "FC_config",
              "diff_vs_FC_pp", "p_holm"};
  const auto configs = config_order(rows);
  std::vector<std::string> members;
  std::vector<std::string> reference;
  for (const auto& c : configs) {
    const CellResult* m = first_row(rows, c);
    if (!m || is_diagnostic(*m) || m->protocol != "HY") continue;
    std::string ref;
    if (m->family != "FC")
      for (const auto& o : configs) {
        const CellResult* mo = first_row(rows, o);
        if (mo && mo->family == "FC" && mo->bridge == m->bridge && design_key(*mo) == design_key(*m)) {
          ref = o;
          break;
        }
      }
    members.push_back(c);
    reference.push_back(ref);
  }
  std::vector<PairedTest> tests(members.size());
  std::vector<PairedTest*> family;
  for (std::size_t i = 0; i < members.size(); ++i) {
    tests[i].p_value = tests[i].mean_diff = std::nan("");
    if (reference[i].empty()) continue;
    // Positive when FC is ahead.
    tests[i] = paired(rows, members[i], reference[i], reps, seed);
    family.push_back(&tests[i]);
  }
  holm_finite(family);
  for (std::size_t i = 0; i < members.size(); ++i) {
    const CellResult* m = first_row(rows, members[i]);
    const auto rs = usable(rows, members[i]);
    const BootstrapSummary b = eff_summary(rs, reps, label_seed(seed, members[i]));
    t.rows.push_back({members[i], m->family, num(m->misspecification), m->response, std::to_string(rs.size()),
                      pct(b.mean), pct(b.half_width), reference[i], pct(tests[i].mean_diff), p_text(tests[i])});
  }
  return t;
}

}  // namespace

Table report_table(const std::string& name, const std::vector<CellResult>& rows, const LeakageConfig& leak,
                   std::size_t reps, std::uint64_t seed) {
  if (name == "architecture") return architecture_table(rows, reps, seed);
  if (name == "budget") return budget_table(rows, reps, seed);
  if (name == "bridge") return bridge_table(rows, reps, seed);
  if (name == "diagnostic") return diagnostic_table(rows, reps, seed);
  if (name == "crossing") return crossing_table(rows, leak, reps, seed, false);
  if (name == "contra") return crossing_table(rows, leak, reps, seed, true);
  if (name == "robustness") return robustness_table(rows, reps, seed);
  throw ContractViolation("report: unknown table '" + name + "'");
}

Frontier frontier(const std::vector<CellResult>& rows, const LeakageConfig& leak, const std::vector<double>& costs,
                  const std::vector<std::string>& configs) {
  std::vector<std::string> chosen = configs;
  if (chosen.empty())
    for (const auto& c : config_order(rows)) {
      const CellResult* m = first_row(rows, c);
      if (m && !is_diagnostic(*m)) chosen.push_back(c);
    }
  struct Entry {
    std::string name;
    double eff, leak;
  };
  std::vector<Entry> entries;
  std::map<std::string, int> family_count;
  for (const auto& c : chosen) {
    const CellResult* m = first_row(rows, c);
    if (!m) throw ContractViolation("frontier: unknown config '" + c + "'");
    ++family_count[m->family];
  }
  for (const auto& c : chosen) {
    const CellResult* m = first_row(rows, c);
    const auto rs = usable(rows, c);
    if (rs.empty()) continue;
    // Rows are named by family unless two configs share one.
    const std::string name = family_count[m->family] == 1 ? m->family : c;
    entries.push_back({name, mean_of(rs, &CellResult::efficiency), mean_leak(rs, leak)});
  }
  Frontier f;
  for (const auto& e : entries)
    for (double c : costs) f.points.push_back({e.name, c, e.eff, e.leak, adjusted_welfare(e.eff, c, e.leak)});
  for (std::size_t a = 0; a < entries.size(); ++a)
    for (std::size_t b = 0; b < entries.size(); ++b) {
      if (a == b || !(entries[b].leak > entries[a].leak)) continue;
      BreakEven be{entries[a].name, entries[b].name, entries[a].eff, entries[b].eff,
                   entries[a].leak, entries[b].leak, 0.0};
      be.c_star = break_even(be.eff_a, be.eff_b, be.l_a, be.l_b);
      f.break_even.push_back(be);
    }
  return f;
}

std::string frontier_csv(const Frontier& f) {
  std::ostringstream os;
  os << "family,cost,efficiency,leakage,adjusted_efficiency\n";
  for (const auto& p : f.points)
    os << p.family << ',' << fmt_sig(p.cost) << ',' << fmt_sig(p.efficiency) << ',' << fmt_sig(p.leakage) << ','
       << fmt_sig(p.adjusted) << '\n';
  return os.str();
}

std::string break_even_csv(const Frontier& f) {
  std::ostringstream os;
  os << "family_low_leakage,family_high_leakage,eff_low,eff_high,leakage_low,leakage_high,break_even_cost\n";
  for (const auto& b : f.break_even)
    os << b.family_a << ',' << b.family_b << ',' << fmt_sig(b.eff_a) << ',' << fmt_sig(b.eff_b) << ','
       << fmt_sig(b.l_a) << ',' << fmt_sig(b.l_b) << ',' << fmt_sig(b.c_star) << '\n';
  return os.str();
}

}  // namespace qcross
