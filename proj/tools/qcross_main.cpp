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

// Command line entry point: calibrate, synth, simulate, report, frontier
// and verify.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qcross/harness/acceptance.hpp"
#include "qcross/harness/experiment.hpp"
#include "qcross/market/market_model.hpp"
#include "qcross/market/panel.hpp"
#include "qcross/numerics/errors.hpp"

namespace fs = std::filesystem;
using namespace qcross;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kCheckFailed = 1;  // verify found a failing criterion
constexpr int kUsage = 2;        // command line
constexpr int kConfig = 3;       // experiment config
constexpr int kInput = 4;        // panel, market, CSV or file access
constexpr int kNumeric = 5;      // contract or convergence failure

void emit(const std::string& text, const std::optional<fs::path>& path) {
  if (path) {
    write_text(*path, text);
  } else {
    std::cout << text;
  }
}

struct ReportSettings {
  std::string experiment;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> metric;

  // Leakage, reps and seed come from the experiment file when given.
  void resolve(LeakageConfig& leak, std::size_t& r, std::uint64_t& s) const {
    ExperimentConfig cfg;
    if (!experiment.empty()) cfg = load_experiment(experiment);
    leak = cfg.leakage;
    r = cfg.bootstrap_reps;
    s = cfg.seed;
    if (reps) {
      if (*reps < 100) throw ConfigError("field 'reps': must be at least 100");
      r = *reps;
    }
    if (seed) s = *seed;
    if (metric) {
      try {
        leak.metric = leakage_metric_from_string(*metric);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("field 'metric': ") + e.what());
      }
    }
  }

  void add(CLI::App* app) {
    app->add_option("--experiment", experiment, "Experiment JSON supplying leakage, reps and seed");
    app->add_option("--reps", reps, "Bootstrap replications");
    app->add_option("--seed", seed, "Bootstrap seed");
    app->add_option("--metric", metric, "Leakage metric: active_pair, effective_name, quantity_weighted, top_name");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qcross: query-based portfolio crossing simulator"};
  app.require_subcommand(1);

  // calibrate
  std::string cal_panel, cal_out, cal_label;
  MarketParams cal_params;
  auto* calibrate = app.add_subcommand("calibrate", "Return panel CSV to market model JSON");
  calibrate->add_option("--panel", cal_panel, "Return panel CSV (date,ticker,return,market_cap)")->required();
  calibrate->add_option("--out", cal_out, "Output market JSON")->required();
  calibrate->add_option("--label", cal_label, "Market label (default: panel file stem)");
  calibrate->add_option("--k", cal_params.k, "Factor count")->capture_default_str();
  calibrate->add_option("--m", cal_params.top_m, "Retained securities")->capture_default_str();
  calibrate->add_option("--coverage", cal_params.coverage, "Minimum return coverage")->capture_default_str();
  calibrate->add_option("--gamma-res", cal_params.gamma_res, "Residual cost scale")->capture_default_str();

  // synth
  std::string syn_out;
  std::uint64_t syn_seed = 1000;
  SynthPanelParams syn_params;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic return panel CSV");
  synth->add_option("--out", syn_out, "Output panel CSV")->required();
  synth->add_option("--seed", syn_seed, "Seed")->capture_default_str();
  synth->add_option("--dates", syn_params.n_dates, "Trading days")->capture_default_str();
  synth->add_option("--tickers", syn_params.n_tickers, "Tickers")->capture_default_str();
  synth->add_option("--missing-rate", syn_params.missing_rate, "Missing return probability")->capture_default_str();

  // simulate
  std::string sim_config, sim_out = "out";
  std::optional<std::size_t> sim_cells, sim_reps;
  std::optional<std::uint64_t> sim_seed;
  bool sim_serial = false, sim_trace = false;
  auto* sim = app.add_subcommand("simulate", "Run an experiment config; writes cells.csv, summary.csv, trace.jsonl");
  sim->add_option("--config", sim_config, "Experiment JSON")->required();
  sim->add_option("--cells", sim_cells, "Override cells per contra-liquidity level");
  sim->add_option("--seed", sim_seed, "Override experiment seed");
  sim->add_option("--reps", sim_reps, "Override bootstrap replications");
  sim->add_option("--out", sim_out, "Output directory")->capture_default_str();
  sim->add_flag("--serial", sim_serial, "Run without the OpenMP pool");
  sim->add_flag("--trace", sim_trace, "Write trace.jsonl");

  // report
  std::string rep_cells, rep_table = "all";
  std::optional<std::string> rep_out;
  ReportSettings rep_settings;
  auto* report = app.add_subcommand("report", "Summary tables from cells.csv");
  report->add_option("--cells", rep_cells, "cells.csv from simulate")->required();
  report->add_option("--table", rep_table, "Table name or 'all'")->capture_default_str();
  report->add_option("--out", rep_out, "Output directory (default: stdout)");
  rep_settings.add(report);

  // frontier
  std::string fr_cells;
  std::vector<double> fr_costs = {0.0, 0.20, 0.45};
  std::vector<std::string> fr_configs;
  std::optional<std::string> fr_out;
  ReportSettings fr_settings;
  auto* front = app.add_subcommand("frontier", "Disclosure-adjusted efficiency and break-even costs");
  front->add_option("--cells", fr_cells, "cells.csv from simulate")->required();
  front->add_option("--costs", fr_costs, "Disclosure costs")->delimiter(',')->capture_default_str();
  front->add_option("--config", fr_configs, "Config labels to include (default: all)")->delimiter(',');
  front->add_option("--out", fr_out, "Output directory for frontier.csv and break_even.csv (default: stdout)");
  fr_settings.add(front);

  // verify
  AcceptanceOptions ver;
  bool ver_serial = false;
  std::string ver_work;
  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
  verify->add_option("--cells", ver.cells, "Matched cells")->capture_default_str();
  verify->add_option("--reps", ver.bootstrap_reps, "Bootstrap replications")->capture_default_str();
  verify->add_option("--seed", ver.seed, "Cell seed")->capture_default_str();
  verify->add_option("--only", ver.only, "Criterion ids to run")->delimiter(',');
  verify->add_option("--work", ver_work, "Scratch directory");
  verify->add_flag("--serial", ver_serial, "Run without the OpenMP pool");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*calibrate) {
      const ReturnPanel panel = ingest_return_panel(cal_panel);
      const std::string label = cal_label.empty() ? fs::path(cal_panel).stem().string() : cal_label;
      const MarketModel model = calibrate_market(panel, cal_params, label);
      save_market(model, cal_out);
      std::cout << "market " << model.label << ": m = " << model.m << ", k = " << cal_params.k << " -> " << cal_out
                << "\n";
    } else if (*synth) {
      write_return_panel(synth_panel(syn_params, syn_seed), syn_out);
      std::cout << "panel " << syn_params.n_dates << " x " << syn_params.n_tickers << " -> " << syn_out << "\n";
    } else if (*sim) {
      ExperimentConfig cfg = load_experiment(sim_config);
      if (sim_cells) {
        if (*sim_cells == 0) throw ConfigError("field 'cells': must be positive");
        cfg.cells = *sim_cells;
      }
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_reps) {
        if (*sim_reps < 100) throw ConfigError("field 'bootstrap_reps': must be at least 100");
        cfg.bootstrap_reps = *sim_reps;
      }
      if (sim_trace) cfg.trace = true;
      fs::create_directories(sim_out);
      const SimulationOutput out = simulate(cfg, sim_out, !sim_serial);
      std::cout << summary_csv(out.summary);
    } else if (*report) {
      LeakageConfig leak;
      std::size_t reps = 0;
      std::uint64_t seed = 0;
      rep_settings.resolve(leak, reps, seed);
      const auto rows = parse_cells_csv(read_text(rep_cells));
      std::vector<std::string> names;
      if (rep_table == "all") {
        names = report_table_names();
      } else {
        names = {rep_table};
      }
      if (rep_out) fs::create_directories(*rep_out);
      for (const auto& name : names) {
        const std::string text = table_csv(report_table(name, rows, leak, reps, seed));
        if (rep_out) {
          emit(text, fs::path(*rep_out) / (name + ".csv"));
        } else {
          if (names.size() > 1) std::cout << "# " << name << "\n";
          std::cout << text;
        }
      }
    } else if (*front) {
      LeakageConfig leak;
      std::size_t reps = 0;
      std::uint64_t seed = 0;
      fr_settings.resolve(leak, reps, seed);
      const auto rows = parse_cells_csv(read_text(fr_cells));
      const Frontier f = frontier(rows, leak, fr_costs, fr_configs);
      if (fr_out) {
        fs::create_directories(*fr_out);
        emit(frontier_csv(f), fs::path(*fr_out) / "frontier.csv");
        emit(break_even_csv(f), fs::path(*fr_out) / "break_even.csv");
      } else {
        std::cout << frontier_csv(f) << "\n" << break_even_csv(f);
      }
    } else if (*verify) {
      ver.parallel = !ver_serial;
      if (!ver_work.empty()) ver.work_dir = ver_work;
      if (ver.bootstrap_reps < 100) throw ConfigError("field 'reps': must be at least 100");
      const auto results =
          run_acceptance(ver, [](const CriterionResult& r) { std::cout << format_criterion(r) << std::endl; });
      std::size_t passed = 0;
      for (const auto& r : results) passed += r.pass;
      std::cout << passed << "/" << results.size() << " criteria passed\n";
      return passed == results.size() ? kOk : kCheckFailed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const CsvError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const PanelError& e) {
    std::cerr << "panel error: " << e.what() << "\n";
    return kInput;
  } catch (const MarketError& e) {
    std::cerr << "market error: " << e.what() << "\n";
    return kInput;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kOk;
}
