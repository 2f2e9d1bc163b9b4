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

#include "qcross/harness/experiment.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qcross/market/panel.hpp"
#include "qcross/numerics/errors.hpp"
#include "qcross/numerics/format.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {

using nlohmann::json;

double LeakageConfig::omega_for(const std::string& family) const {
  const auto it = omega.find(family);
  return it == omega.end() ? 1.0 : it->second;
}

namespace {

// Reads one JSON object, tracking consumed keys so leftovers can be
// reported by their full path.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("field '" + where() + "': expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError("field '" + at(key) + "': expected a number");
    return v.get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError("field '" + at(key) + "': expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError("field '" + at(key) + "': expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError("field '" + at(key) + "': expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError("field '" + at(key) + "': expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError("field '" + at(key) + "': expected a number or an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("field '" + at(key) + "': expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    if (!has(key)) return {};
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError("field '" + at(key) + "': expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError("field '" + at(key) + "': expected an array of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("field '" + at(it.key()) + "': unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto field_guard(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("field '" + field + "': " + e.what());
  }
}

ProtocolConfig parse_protocol(const json& j, const std::string& path) {
  Fields f(j, path);
  ProtocolConfig c;
  c.label = f.text("label", "");
  if (c.label.empty()) throw ConfigError("field '" + f.at("label") + "': required");
  if (c.label.rfind("DIAG:", 0) == 0) throw ConfigError("field '" + f.at("label") + "': prefix DIAG: is reserved");
  if (c.label.find_first_of(",\n\"") != std::string::npos)
    throw ConfigError("field '" + f.at("label") + "': must not contain commas, quotes or newlines");
  c.protocol = field_guard(f.at("protocol"), [&] { return protocol_from_string(f.text("protocol", "HY")); });
  c.family = field_guard(f.at("family"), [&] { return family_from_string(f.text("family", "FC")); });
  c.total_budget = f.count("budget", c.total_budget);
  if (c.protocol == Protocol::kVO) c.dq_rounds = 0;
  if (c.protocol == Protocol::kDO || c.protocol == Protocol::kSN) c.dq_rounds = c.total_budget;
  if (c.protocol != Protocol::kHY) c.bridge = false;
  // HY defaults to the two-thirds demand share of the 12 + 6 baseline.
  if (c.protocol == Protocol::kHY) c.dq_rounds = (2 * c.total_budget + 1) / 3;
  c.dq_rounds = f.count("dq_rounds", c.dq_rounds);
  c.bridge = f.flag("bridge", c.bridge);
  c.rho_dq = f.number("rho_dq", c.rho_dq);
  c.response = field_guard(f.at("response"), [&] { return response_from_string(f.text("response", "exact")); });
  c.misspecification = f.number("misspecification", c.misspecification);
  c.min_l1 = f.number("min_l1", c.min_l1);
  c.step0 = f.number("step0", c.step0);
  c.names_per_participant = f.count("names", c.names_per_participant);
  c.name_eps = f.number("name_eps", c.name_eps);
  c.shared_flags = f.count("shared_flags", c.shared_flags);
  c.w_vq = f.number("w_vq", c.w_vq);
  c.w_reg = f.number("w_reg", c.w_reg);
  c.eta_bound = f.number("eta_bound", c.eta_bound);
  c.wdp_node_limit = f.count("wdp_node_limit", c.wdp_node_limit);
  f.finish();
  try {
    c.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

}  // namespace

ExperimentConfig experiment_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Fields f(root, "");
  ExperimentConfig cfg;
  cfg.cells = f.count("cells", cfg.cells);
  if (cfg.cells == 0) throw ConfigError("field 'cells': must be positive");
  cfg.seed = f.seed("seed", cfg.seed);
  cfg.bootstrap_reps = f.count("bootstrap_reps", cfg.bootstrap_reps);
  if (cfg.bootstrap_reps < 100) throw ConfigError("field 'bootstrap_reps': must be at least 100");
  cfg.trace = f.flag("trace", cfg.trace);

  if (f.has("markets")) {
    Fields m(f.raw("markets"), "markets");
    MarketSource& s = cfg.markets;
    s.kind = m.text("source", s.kind);
    if (s.kind != "synthetic" && s.kind != "csv" && s.kind != "model")
      throw ConfigError("field 'markets.source': expected synthetic, csv or model");
    s.count = m.count("count", s.count);
    s.seed = m.seed("seed", s.seed);
    s.paths = m.strings("paths");
    if (s.kind == "synthetic" && s.count == 0) throw ConfigError("field 'markets.count': must be positive");
    if (s.kind != "synthetic" && s.paths.empty()) throw ConfigError("field 'markets.paths': required for " + s.kind);
    s.panel.n_dates = m.count("dates", s.panel.n_dates);
    s.panel.n_tickers = m.count("tickers", s.panel.n_tickers);
    s.params.k = m.count("k", s.params.k);
    s.params.top_m = m.count("m", s.params.top_m);
    s.params.nu = m.number("nu", s.params.nu);
    s.params.rho_K = m.number("rho_K", s.params.rho_K);
    s.params.gamma_res = m.number("gamma_res", s.params.gamma_res);
    s.params.coverage = m.number("coverage", s.params.coverage);
    s.params.correlation_alpha = m.number("correlation_alpha", s.params.correlation_alpha);
    if (s.params.k == 0) throw ConfigError("field 'markets.k': must be positive");
    if (s.params.top_m < s.params.k) throw ConfigError("field 'markets.m': must be at least k");
    if (s.kind == "synthetic" && s.panel.n_tickers < s.params.top_m)
      throw ConfigError("field 'markets.tickers': must be at least m");
    if (!(s.params.gamma_res > 0.0)) throw ConfigError("field 'markets.gamma_res': must be positive");
    m.finish();
  }

  if (f.has("cell")) {
    Fields c(f.raw("cell"), "cell");
    cfg.cell.n_participants = c.count("participants", cfg.cell.n_participants);
    if (cfg.cell.n_participants == 0) throw ConfigError("field 'cell.participants': must be positive");
    cfg.zeta_grid = c.numbers("zeta_contra", {});
    for (double z : cfg.zeta_grid)
      if (!(z >= 0.0 && z <= 1.0)) throw ConfigError("field 'cell.zeta_contra': values must lie in [0, 1]");
    if (cfg.zeta_grid.size() == 1) {
      cfg.cell.zeta_contra = cfg.zeta_grid.front();
      cfg.zeta_grid.clear();
    }
    c.finish();
  }

  if (!f.has("protocols")) throw ConfigError("field 'protocols': required");
  const json& protos = f.raw("protocols");
  if (!protos.is_array() || protos.empty()) throw ConfigError("field 'protocols': expected a nonempty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < protos.size(); ++i) {
    const std::string path = "protocols[" + std::to_string(i) + "]";
    ProtocolConfig p = parse_protocol(protos[i], path);
    if (!labels.insert(p.label).second) throw ConfigError("field '" + path + ".label': duplicate label " + p.label);
    cfg.protocols.push_back(std::move(p));
  }

  if (f.has("diagnostic")) {
    Fields d(f.raw("diagnostic"), "diagnostic");
    cfg.diagnostic.enabled = d.flag("enabled", true);
    cfg.diagnostic.dq_rounds = d.count("dq_rounds", cfg.diagnostic.dq_rounds);
    cfg.diagnostic.rho_grid = d.numbers("rho_grid", cfg.diagnostic.rho_grid);
    if (cfg.diagnostic.dq_rounds < 2) throw ConfigError("field 'diagnostic.dq_rounds': must be at least 2");
    for (double r : cfg.diagnostic.rho_grid)
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("field 'diagnostic.rho_grid': values must lie in [0, 1]");
    d.finish();
  }

  if (f.has("leakage")) {
    Fields l(f.raw("leakage"), "leakage");
    cfg.leakage.metric =
        field_guard(l.at("metric"), [&] { return leakage_metric_from_string(l.text("metric", "active_pair")); });
    cfg.leakage.eps = l.number("eps", cfg.leakage.eps);
    if (!(cfg.leakage.eps > 0.0)) throw ConfigError("field 'leakage.eps': must be positive");
    if (l.has("omega")) {
      const json& o = l.raw("omega");
      if (!o.is_object()) throw ConfigError("field 'leakage.omega': expected an object");
      for (auto it = o.begin(); it != o.end(); ++it) {
        if (!it.value().is_number() || it.value().get<double>() < 0.0)
          throw ConfigError("field 'leakage.omega." + it.key() + "': expected a nonnegative number");
        cfg.leakage.omega[it.key()] = it.value().get<double>();
      }
    }
    l.finish();
  }
  f.finish();
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) { return experiment_from_json(read_text(path)); }

std::vector<std::shared_ptr<const MarketModel>> build_markets(const MarketSource& source) {
  std::vector<std::shared_ptr<const MarketModel>> out;
  if (source.kind == "synthetic") {
    for (std::size_t s = 0; s < source.count; ++s)
      out.push_back(std::make_shared<const MarketModel>(
          synthetic_market(source.panel, source.params, source.seed + s, "S" + std::to_string(s))));
  } else if (source.kind == "csv") {
    for (const auto& p : source.paths)
      out.push_back(std::make_shared<const MarketModel>(
          calibrate_market(ingest_return_panel(p), source.params, std::filesystem::path(p).stem().string())));
  } else if (source.kind == "model") {
    for (const auto& p : source.paths) out.push_back(std::make_shared<const MarketModel>(load_market(p)));
  } else {
    throw ConfigError("field 'markets.source': unknown source " + source.kind);
  }
  return out;
}

std::vector<EconomyCell> build_cells(const std::vector<std::shared_ptr<const MarketModel>>& markets,
                                     const ExperimentConfig& cfg, bool parallel) {
  if (markets.empty()) throw ContractViolation("build_cells: no markets");
  const std::vector<double> zetas = cfg.zeta_grid.empty() ? std::vector<double>{cfg.cell.zeta_contra} : cfg.zeta_grid;
  std::vector<EconomyCell> cells;
  for (double z : zetas)
    for (std::size_t c = 0; c < cfg.cells; ++c) {
      CellParams params = cfg.cell;
      params.zeta_contra = z;
      // The same shocks recur at every contra-liquidity level.
      cells.push_back(make_cell(markets[c % markets.size()], params, derive_key(cfg.seed, {c})));
    }
  const long total = static_cast<long>(cells.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long c = 0; c < total; ++c) ensure_oracle(cells[static_cast<std::size_t>(c)]);
  } else {
    for (long c = 0; c < total; ++c) ensure_oracle(cells[static_cast<std::size_t>(c)]);
  }
  return cells;
}

std::string diagnostic_label(const std::string& rule) { return "DIAG:" + rule; }

namespace {

CellResult excluded_row(const EconomyCell& cell, std::size_t index, const std::string& label, const char* why) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CellResult r;
  r.config = label;
  r.cell = index;
  r.market = cell.market->label;
  r.zeta_contra = cell.zeta_contra;
  r.seed = cell.seed;
  r.w_star = cell.oracle ? cell.oracle->welfare : nan;
  r.welfare = r.efficiency = r.dq_welfare = r.dq_efficiency = r.reported_welfare = nan;
  r.residual_l1 = r.crossed_notional = r.certificate_gap = nan;
  r.leakage = {nan, nan, nan, nan};
  r.incumbent_ok = r.budget_ok = false;
  r.error = why;
  return r;
}

std::vector<CellResult> diagnostic_rows(const EconomyCell& cell, std::size_t index, const DiagnosticConfig& d) {
  ProtocolConfig cfg;
  cfg.label = "DIAG";
  cfg.protocol = Protocol::kDO;
  cfg.total_budget = d.dq_rounds;
  cfg.dq_rounds = d.dq_rounds;
  cfg.bridge = false;
  std::vector<std::string> rules = {"primitive", "bridge_extra", "bridge_within"};
  for (double r : d.rho_grid) rules.push_back("rp_" + fmt_sig(r, 3));
  std::vector<CellResult> out;
  try {
    for (const auto& row : diagnostic_accounting(cell, cfg, d.rho_grid)) {
      CellResult r = excluded_row(cell, index, diagnostic_label(row.rule), "");
      r.protocol = "DIAG";
      r.family = "DIAG";
      r.total_budget = row.rule == "bridge_extra" ? d.dq_rounds + 1 : d.dq_rounds;
      r.dq_rounds = row.rule == "bridge_within" ? d.dq_rounds - 1 : d.dq_rounds;
      r.bridge = row.rule.rfind("bridge", 0) == 0;
      r.response = "exact";
      r.welfare = row.welfare;
      r.efficiency = row.efficiency;
      r.incumbent_ok = r.budget_ok = true;
      out.push_back(std::move(r));
    }
  } catch (const std::exception& e) {
    out.clear();
    for (const auto& rule : rules) out.push_back(excluded_row(cell, index, diagnostic_label(rule), e.what()));
  }
  return out;
}

}  // namespace

ExperimentResult run_matched_experiment(const std::vector<ProtocolConfig>& cfgs, const std::vector<EconomyCell>& cells,
                                        const RunOptions& opts) {
  if (cfgs.empty()) throw ContractViolation("run_matched_experiment: no configs");
  const std::size_t per_cell = cfgs.size() + (opts.diagnostic.enabled ? 1 : 0);
  const std::size_t tasks = cells.size() * per_cell;
  std::vector<std::vector<CellResult>> slots(tasks);
  std::vector<std::string> traces(tasks);

  const auto run_task = [&](std::size_t t) {
    const std::size_t c = t / per_cell, k = t % per_cell;
    const EconomyCell& cell = cells[c];
    const bool usable = cell.oracle && cell.oracle->welfare > kMinOracleWelfare;
    if (k == cfgs.size()) {
      slots[t] = usable ? diagnostic_rows(cell, c, opts.diagnostic)
                        : std::vector<CellResult>{excluded_row(cell, c, diagnostic_label("primitive"),
                                                               "excluded: oracle welfare not positive")};
      return;
    }
    if (!usable) {
      const ProtocolConfig& pc = cfgs[k];
      CellResult r = excluded_row(cell, c, pc.label, "excluded: oracle welfare not positive");
      r.protocol = to_string(pc.protocol);
      r.family = pc.protocol == Protocol::kSN ? "SN" : to_string(pc.family);
      r.total_budget = pc.total_budget;
      r.dq_rounds = pc.dq_rounds;
      r.bridge = pc.bridge;
      r.rho_dq = pc.rho_dq;
      r.response = to_string(pc.response);
      r.misspecification = pc.misspecification;
      r.min_l1 = pc.min_l1;
      slots[t] = {std::move(r)};
      return;
    }
    TraceLog log(opts.trace);
    log.set_context("\"cell\":" + std::to_string(c) + ",\"config\":\"" + cfgs[k].label + "\",");
    CellResult r = run_protocol(cell, cfgs[k], opts.trace ? &log : nullptr, opts.leakage_eps);
    r.cell = c;
    slots[t] = {std::move(r)};
    traces[t] = log.text();
  };

  const long total = static_cast<long>(tasks);
  if (opts.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long t = 0; t < total; ++t) run_task(static_cast<std::size_t>(t));
  } else {
    for (long t = 0; t < total; ++t) run_task(static_cast<std::size_t>(t));
  }

  ExperimentResult out;
  for (std::size_t t = 0; t < tasks; ++t) {
    for (auto& r : slots[t]) out.rows.push_back(std::move(r));
    if (opts.trace) out.traces.push_back(std::move(traces[t]));
  }
  return out;
}

// ---- CSV ----------------------------------------------------------------

namespace {

const std::vector<std::string>& cell_columns() {
  static const std::vector<std::string> cols = {
      "config", "protocol", "family", "total_budget", "dq_rounds", "bridge", "rho_dq", "response",
      "misspecification", "min_l1", "cell", "market", "zeta_contra", "seed", "w_star", "welfare", "efficiency",
      "dq_welfare", "dq_efficiency", "reported_welfare", "residual_l1", "crossed_notional", "leak_active_pair",
      "leak_effective_name", "leak_quantity_weighted", "leak_top_name", "certificate_gap", "incumbent_ok",
      "budget_ok", "wdp_exact", "error"};
  return cols;
}

std::string clean(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace

std::string cells_csv(const std::vector<CellResult>& rows) {
  std::ostringstream os;
  const auto& cols = cell_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : rows) {
    os << clean(r.config) << ',' << r.protocol << ',' << r.family << ',' << r.total_budget << ',' << r.dq_rounds
       << ',' << (r.bridge ? 1 : 0) << ',' << fmt_sig(r.rho_dq) << ',' << r.response << ','
       << fmt_sig(r.misspecification) << ',' << fmt_sig(r.min_l1) << ',' << r.cell << ',' << clean(r.market) << ','
       << fmt_sig(r.zeta_contra) << ',' << r.seed << ',' << fmt_sig(r.w_star) << ',' << fmt_sig(r.welfare) << ','
       << fmt_sig(r.efficiency) << ',' << fmt_sig(r.dq_welfare) << ',' << fmt_sig(r.dq_efficiency) << ','
       << fmt_sig(r.reported_welfare) << ',' << fmt_sig(r.residual_l1) << ',' << fmt_sig(r.crossed_notional) << ','
       << fmt_sig(r.leakage.active_pair) << ',' << fmt_sig(r.leakage.effective_name) << ','
       << fmt_sig(r.leakage.quantity_weighted) << ',' << fmt_sig(r.leakage.top_name) << ','
       << fmt_sig(r.certificate_gap) << ',' << (r.incumbent_ok ? 1 : 0) << ',' << (r.budget_ok ? 1 : 0) << ','
       << (r.wdp_exact ? 1 : 0) << ',' << clean(r.error) << '\n';
  }
  return os.str();
}

std::vector<CellResult> parse_cells_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw CsvError("cells csv: empty input");
  const std::vector<std::string> header = split(line);
  if (header != cell_columns()) throw CsvError("cells csv: unexpected header");
  std::vector<CellResult> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line);
    if (f.size() != header.size())
      throw CsvError("cells csv: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    CellResult r;
    try {
      std::size_t i = 0;
      r.config = f[i++];
      r.protocol = f[i++];
      r.family = f[i++];
      r.total_budget = std::stoul(f[i++]);
      r.dq_rounds = std::stoul(f[i++]);
      r.bridge = f[i++] == "1";
      r.rho_dq = to_double(f[i++]);
      r.response = f[i++];
      r.misspecification = to_double(f[i++]);
      r.min_l1 = to_double(f[i++]);
      r.cell = std::stoul(f[i++]);
      r.market = f[i++];
      r.zeta_contra = to_double(f[i++]);
      r.seed = std::stoull(f[i++]);
      r.w_star = to_double(f[i++]);
      r.welfare = to_double(f[i++]);
      r.efficiency = to_double(f[i++]);
      r.dq_welfare = to_double(f[i++]);
      r.dq_efficiency = to_double(f[i++]);
      r.reported_welfare = to_double(f[i++]);
      r.residual_l1 = to_double(f[i++]);
      r.crossed_notional = to_double(f[i++]);
      r.leakage.active_pair = to_double(f[i++]);
      r.leakage.effective_name = to_double(f[i++]);
      r.leakage.quantity_weighted = to_double(f[i++]);
      r.leakage.top_name = to_double(f[i++]);
      r.certificate_gap = to_double(f[i++]);
      r.incumbent_ok = f[i++] == "1";
      r.budget_ok = f[i++] == "1";
      r.wdp_exact = f[i++] == "1";
      r.error = f[i++];
    } catch (const std::logic_error& e) {
      throw CsvError("cells csv: line " + std::to_string(lineno) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

SimulationOutput simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, bool parallel) {
  const auto markets = build_markets(cfg.markets);
  const std::vector<EconomyCell> cells = build_cells(markets, cfg, parallel);
  RunOptions opts;
  opts.parallel = parallel;
  opts.trace = cfg.trace;
  opts.leakage_eps = cfg.leakage.eps;
  opts.diagnostic = cfg.diagnostic;
  SimulationOutput out;
  out.result = run_matched_experiment(cfg.protocols, cells, opts);
  out.summary = summarize(out.result.rows, cfg.leakage, cfg.bootstrap_reps, cfg.seed);
  write_text(out_dir / "cells.csv", cells_csv(out.result.rows));
  write_text(out_dir / "summary.csv", summary_csv(out.summary));
  if (cfg.trace) {
    std::string all;
    for (const auto& t : out.result.traces) all += t;
    write_text(out_dir / "trace.jsonl", all);
  }
  return out;
}

}  // namespace qcross
