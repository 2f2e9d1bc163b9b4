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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcross/numerics/matrix.hpp"

namespace qcross {

class PanelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Daily return panel. Missing cells hold NaN. Tickers are kept in
/// lexicographic order, dates strictly increasing (ISO yyyy-mm-dd).
struct ReturnPanel {
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  Matrix returns;       ///< dates x tickers
  Vector market_caps;   ///< terminal capitalization per ticker, NaN if never reported

  std::size_t n_dates() const { return dates.size(); }
  std::size_t n_tickers() const { return tickers.size(); }
  static bool missing(double r) { return std::isnan(r); }
};

/// Reads `date,ticker,return,market_cap` CSV. Empty fields are missing.
/// Throws PanelError naming the row for parse errors and duplicate
/// (date, ticker) pairs, and for an empty panel.
ReturnPanel ingest_return_panel(const std::filesystem::path& path);
ReturnPanel parse_return_panel(const std::string& csv_text);

/// Long-format CSV with round-trip precision.
void write_return_panel(const ReturnPanel& panel, const std::filesystem::path& path);
std::string format_return_panel(const ReturnPanel& panel);

/// Keeps tickers with at least `coverage` non-missing returns, then the
/// `top_m` largest by terminal cap (ties by ticker). Throws PanelError when
/// fewer than top_m tickers survive.
ReturnPanel screen_universe(const ReturnPanel& panel, double coverage, std::size_t top_m);

/// Column subset in the given order.
ReturnPanel select_tickers(const ReturnPanel& panel, const std::vector<std::size_t>& columns);

struct SynthPanelParams {
  std::size_t n_dates = 252;
  std::size_t n_tickers = 30;
  std::size_t n_factors = 5;
  double idio_vol_median = 0.015;
  double idio_vol_dispersion = 0.30;  ///< lognormal sigma
  double cap_median = 1.0e10;
  double cap_dispersion = 1.0;        ///< lognormal sigma
  double missing_rate = 0.005;
  std::vector<double> factor_vols = {0.012, 0.008, 0.006, 0.005, 0.004};
};

/// Factor-model panel r_t = F0 z_t + eps_t with unit-sphere loadings (first
/// factor loading taken in absolute value, a market factor), lognormal
/// idiosyncratic vols and lognormal caps. Deterministic in `seed`.
ReturnPanel synth_panel(const SynthPanelParams& params, std::uint64_t seed);

}  // namespace qcross
