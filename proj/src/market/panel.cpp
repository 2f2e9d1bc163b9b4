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

#include "qcross/market/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "qcross/numerics/linalg.hpp"
#include "qcross/numerics/rng.hpp"

namespace qcross {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool valid_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

double parse_number(const std::string& field, std::size_t row, const char* column) {
  if (field.empty()) return kNaN;
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw PanelError("row " + std::to_string(row) + ": cannot parse " + column + " '" + field + "'");
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ReturnPanel parse_return_panel(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw PanelError("empty panel: no header");
  ++row;
  const auto header = split_csv(line);
  if (header != std::vector<std::string>{"date", "ticker", "return", "market_cap"})
    throw PanelError("row 1: expected header date,ticker,return,market_cap");

  struct Record {
    std::string date;
    std::string ticker;
    double ret;
    double cap;
  };
  std::vector<Record> records;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4)
      throw PanelError("row " + std::to_string(row) + ": expected 4 fields, got " + std::to_string(f.size()));
    if (!valid_iso_date(f[0]))
      throw PanelError("row " + std::to_string(row) + ": invalid date '" + f[0] + "'");
    if (f[1].empty()) throw PanelError("row " + std::to_string(row) + ": empty ticker");
    const double ret = parse_number(f[2], row, "return");
    const double cap = parse_number(f[3], row, "market_cap");
    if (!std::isnan(cap) && cap <= 0.0)
      throw PanelError("row " + std::to_string(row) + ": market_cap must be positive");
    auto [it, inserted] = seen.emplace(std::make_pair(f[0], f[1]), row);
    if (!inserted)
      throw PanelError("row " + std::to_string(row) + ": duplicate (date, ticker) " + f[0] + "," + f[1] +
                       " first seen at row " + std::to_string(it->second));
    records.push_back({f[0], f[1], ret, cap});
  }
  if (records.empty()) throw PanelError("empty panel: no data rows");

  std::set<std::string> date_set;
  std::set<std::string> ticker_set;
  for (const auto& r : records) {
    date_set.insert(r.date);
    ticker_set.insert(r.ticker);
  }
  ReturnPanel p;
  p.dates.assign(date_set.begin(), date_set.end());
  p.tickers.assign(ticker_set.begin(), ticker_set.end());
  p.returns = Matrix(p.dates.size(), p.tickers.size(), kNaN);
  p.market_caps.assign(p.tickers.size(), kNaN);

  std::map<std::string, std::size_t> date_idx;
  std::map<std::string, std::size_t> ticker_idx;
  for (std::size_t i = 0; i < p.dates.size(); ++i) date_idx[p.dates[i]] = i;
  for (std::size_t j = 0; j < p.tickers.size(); ++j) ticker_idx[p.tickers[j]] = j;

  std::vector<std::ptrdiff_t> cap_date(p.tickers.size(), -1);
  for (const auto& r : records) {
    const std::size_t i = date_idx[r.date];
    const std::size_t j = ticker_idx[r.ticker];
    p.returns(i, j) = r.ret;
    if (!std::isnan(r.cap) && static_cast<std::ptrdiff_t>(i) > cap_date[j]) {
      cap_date[j] = static_cast<std::ptrdiff_t>(i);
      p.market_caps[j] = r.cap;
    }
  }
  return p;
}

ReturnPanel ingest_return_panel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PanelError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_return_panel(ss.str());
}

std::string format_return_panel(const ReturnPanel& panel) {
  std::string out = "date,ticker,return,market_cap\n";
  for (std::size_t i = 0; i < panel.n_dates(); ++i) {
    for (std::size_t j = 0; j < panel.n_tickers(); ++j) {
      const double r = panel.returns(i, j);
      // The terminal cap is written on every row; ingest keeps the last one.
      const double cap = panel.market_caps[j];
      if (std::isnan(r) && std::isnan(cap)) continue;
      out += panel.dates[i];
      out += ',';
      out += panel.tickers[j];
      out += ',';
      out += format_double(r);
      out += ',';
      out += format_double(cap);
      out += '\n';
    }
  }
  return out;
}

void write_return_panel(const ReturnPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw PanelError("cannot write " + path.string());
  out << format_return_panel(panel);
}

ReturnPanel select_tickers(const ReturnPanel& panel, const std::vector<std::size_t>& columns) {
  ReturnPanel out;
  out.dates = panel.dates;
  out.returns = Matrix(panel.n_dates(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const std::size_t j = columns[c];
    out.tickers.push_back(panel.tickers[j]);
    out.market_caps.push_back(panel.market_caps[j]);
    for (std::size_t i = 0; i < panel.n_dates(); ++i) out.returns(i, c) = panel.returns(i, j);
  }
  return out;
}

ReturnPanel screen_universe(const ReturnPanel& panel, double coverage, std::size_t top_m) {
  if (!(coverage > 0.0 && coverage <= 1.0))
    throw PanelError("screen_universe: coverage must lie in (0, 1]");
  const double t = static_cast<double>(panel.n_dates());
  std::vector<std::size_t> survivors;
  for (std::size_t j = 0; j < panel.n_tickers(); ++j) {
    std::size_t present = 0;
    for (std::size_t i = 0; i < panel.n_dates(); ++i) present += ReturnPanel::missing(panel.returns(i, j)) ? 0 : 1;
    if (static_cast<double>(present) >= coverage * t - 1e-9) survivors.push_back(j);
  }
  if (survivors.size() < top_m)
    throw PanelError("screen_universe: only " + std::to_string(survivors.size()) +
                     " tickers pass the coverage screen, need " + std::to_string(top_m));

  std::vector<std::size_t> ranked = survivors;
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    const double ca = panel.market_caps[a];
    const double cb = panel.market_caps[b];
    const bool na = std::isnan(ca);
    const bool nb = std::isnan(cb);
    if (na != nb) return nb;
    if (!na && ca != cb) return ca > cb;
    return panel.tickers[a] < panel.tickers[b];
  });
  ranked.resize(top_m);
  std::sort(ranked.begin(), ranked.end());
  return select_tickers(panel, ranked);
}

ReturnPanel synth_panel(const SynthPanelParams& params, std::uint64_t seed) {
  const std::size_t t_len = params.n_dates;
  const std::size_t n = params.n_tickers;
  const std::size_t k = params.n_factors;
  CounterRng rng(seed, {0x5917ULL});

  Matrix loadings(n, k);
  for (std::size_t j = 0; j < n; ++j) {
    Vector row(k);
    for (auto& x : row) x = rng.normal();
    const double nr = std::max(norm2(row), 1e-12);
    for (std::size_t f = 0; f < k; ++f) loadings(j, f) = row[f] / nr;
    if (k > 0) loadings(j, 0) = std::abs(loadings(j, 0));
  }
  Vector idio(n);
  for (auto& s : idio) s = params.idio_vol_median * std::exp(params.idio_vol_dispersion * rng.normal());

  ReturnPanel p;
  p.returns = Matrix(t_len, n);
  for (std::size_t j = 0; j < n; ++j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "S%03zu", j);
    p.tickers.emplace_back(buf);
    p.market_caps.push_back(params.cap_median * std::exp(params.cap_dispersion * rng.normal()));
  }

  // Weekday calendar starting 2025-01-02 (a Thursday); month lengths of 2025/2026.
  static constexpr int kMonthDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int year = 2025, month = 1, day = 2, weekday = 4;  // 1 = Monday
  for (std::size_t i = 0; i < t_len;) {
    if (weekday <= 5) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
      p.dates.emplace_back(buf);
      ++i;
    }
    weekday = weekday % 7 + 1;
    int mdays = kMonthDays[month - 1];
    if (month == 2 && year % 4 == 0) mdays = 29;
    if (++day > mdays) {
      day = 1;
      if (++month > 12) {
        month = 1;
        ++year;
      }
    }
  }

  Vector z(k);
  for (std::size_t i = 0; i < t_len; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      const double vol = f < params.factor_vols.size() ? params.factor_vols[f] : params.factor_vols.back();
      z[f] = vol * rng.normal();
    }
    for (std::size_t j = 0; j < n; ++j) {
      double r = dot(loadings.row(j), z) + idio[j] * rng.normal();
      if (rng.uniform() < params.missing_rate) r = kNaN;
      p.returns(i, j) = r;
    }
  }
  return p;
}

}  // namespace qcross
