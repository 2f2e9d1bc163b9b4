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
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcross/economy/economy.hpp"
#include "qcross/harness/metrics.hpp"
#include "qcross/harness/protocol.hpp"
#include "qcross/market/market_model.hpp"

namespace qcross {

/// Invalid experiment configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed cells.csv input.
class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MarketSource {
  std::string kind = "synthetic";  ///< synthetic | csv | model
  std::size_t count = 4;           ///< synthetic strata
  std::uint64_t seed = 1000;
  SynthPanelParams panel;
  MarketParams params;
  std::vector<std::string> paths;  ///< csv panels or market JSON files
};

struct LeakageConfig {
  LeakageMetric metric = LeakageMetric::kActivePair;
  double eps = 0.01;
  std::map<std::string, double> omega = {{"SL", 1.0}, {"SN", 1.0}, {"FC", 0.45}};

  /// Family multiplier, 1 when unlisted.
  double omega_for(const std::string& family) const;
};

struct DiagnosticConfig {
  bool enabled = false;
  std::size_t dq_rounds = 18;
  std::vector<double> rho_grid = {0.10, 0.35, 0.70, 1.0};
};

struct ExperimentConfig {
  MarketSource markets;
  std::size_t cells = 50;          ///< per contra-liquidity level
  std::uint64_t seed = 7;
  CellParams cell;
  std::vector<double> zeta_grid;   ///< empty: cell.zeta_contra only
  std::vector<ProtocolConfig> protocols;
  DiagnosticConfig diagnostic;
  std::size_t bootstrap_reps = 2000;
  LeakageConfig leakage;
  bool trace = false;
};

/// Parses and validates; unknown keys are rejected.
ExperimentConfig experiment_from_json(const std::string& text);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Market strata in a fixed order.
std::vector<std::shared_ptr<const MarketModel>> build_markets(const MarketSource& source);

/// Cell c uses market c mod M (round-robin strata) and seed
/// derive_key(seed, {c}); oracles are computed. Cells are grouped by
/// contra-liquidity level when a grid is given.
std::vector<EconomyCell> build_cells(const std::vector<std::shared_ptr<const MarketModel>>& markets,
                                     const ExperimentConfig& cfg, bool parallel = true);

struct RunOptions {
  bool parallel = true;
  bool trace = false;
  double leakage_eps = 0.01;
  DiagnosticConfig diagnostic;
};

struct ExperimentResult {
  std::vector<CellResult> rows;      ///< cell-major, configs in input order
  std::vector<std::string> traces;   ///< parallel to rows when tracing
};

/// Every config runs on the identical cell objects. Rows are keyed by
/// (cell, config) so the parallel and serial paths give identical output.
ExperimentResult run_matched_experiment(const std::vector<ProtocolConfig>& cfgs, const std::vector<EconomyCell>& cells,
                                        const RunOptions& opts = {});

/// Label used for diagnostic-accounting rows.
std::string diagnostic_label(const std::string& rule);

// ---- CSV ----------------------------------------------------------------

std::string cells_csv(const std::vector<CellResult>& rows);
std::vector<CellResult> parse_cells_csv(const std::string& text);

struct ConfigSummary {
  std::string config;
  std::size_t n = 0;
  BootstrapSummary efficiency;
  double residual_l1 = 0.0;
  double crossed_notional = 0.0;
  double leakage = 0.0;   ///< selected metric, omega applied
  PairedTest vs_reference;  ///< against the first config
};

/// Per-config summaries over cells with finite efficiency.
std::vector<ConfigSummary> summarize(const std::vector<CellResult>& rows, const LeakageConfig& leak,
                                     std::size_t reps, std::uint64_t seed);
std::string summary_csv(const std::vector<ConfigSummary>& s);

/// Paired efficiency differences b - a over cells where both are finite.
struct PairedSample {
  std::vector<double> diffs;
  std::vector<std::string> strata;
};
PairedSample paired_efficiency(const std::vector<CellResult>& rows, const std::string& config_a,
                               const std::string& config_b);

/// Leakage under the family multiplier, min(1, omega * raw).
double weighted_leakage(const CellResult& r, const LeakageConfig& leak);

// ---- report tables --------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
std::string table_csv(const Table& t);

/// architecture | budget | bridge | diagnostic | crossing | contra | robustness
Table report_table(const std::string& name, const std::vector<CellResult>& rows, const LeakageConfig& leak,
                   std::size_t reps, std::uint64_t seed);
const std::vector<std::string>& report_table_names();

// ---- frontier -------------------------------------------------------------

struct FrontierPoint {
  std::string family;
  double cost = 0.0;
  double efficiency = 0.0;
  double leakage = 0.0;
  double adjusted = 0.0;
};

struct BreakEven {
  std::string family_a;  ///< lower leakage
  std::string family_b;
  double eff_a = 0.0, eff_b = 0.0, l_a = 0.0, l_b = 0.0;
  double c_star = 0.0;
};

struct Frontier {
  std::vector<FrontierPoint> points;
  std::vector<BreakEven> break_even;
};

/// Family means over rows of the named configs (all non-diagnostic rows
/// when empty), adjusted welfare at each cost, and break-even costs for
/// every pair with distinct leakage.
Frontier frontier(const std::vector<CellResult>& rows, const LeakageConfig& leak, const std::vector<double>& costs,
                  const std::vector<std::string>& configs = {});
std::string frontier_csv(const Frontier& f);
std::string break_even_csv(const Frontier& f);

// ---- simulate ---------------------------------------------------------------

struct SimulationOutput {
  ExperimentResult result;
  std::vector<ConfigSummary> summary;
};

/// Builds markets and cells, runs every config and writes cells.csv,
/// summary.csv and (when tracing) trace.jsonl into `out_dir`.
SimulationOutput simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, bool parallel = true);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace qcross
