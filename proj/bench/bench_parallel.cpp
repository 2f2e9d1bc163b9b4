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

// Serial reference against the OpenMP path for the three parallel kernels:
// oracle construction, the matched experiment loop and the bootstrap.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "qcross/harness/experiment.hpp"
#include "qcross/harness/metrics.hpp"
#include "qcross/numerics/rng.hpp"

namespace {

using namespace qcross;

ExperimentConfig bench_config(std::size_t cells) {
  ExperimentConfig cfg;
  cfg.cells = cells;
  ProtocolConfig hy;
  hy.label = "HY";
  cfg.protocols = {hy};
  return cfg;
}

const std::vector<std::shared_ptr<const MarketModel>>& markets() {
  static const auto m = build_markets(MarketSource{});
  return m;
}

void BM_BuildCells(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const ExperimentConfig cfg = bench_config(8);
  for (auto _ : state) benchmark::DoNotOptimize(build_cells(markets(), cfg, parallel));
}

void BM_MatchedExperiment(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const ExperimentConfig cfg = bench_config(8);
  const auto cells = build_cells(markets(), cfg, true);
  RunOptions opts;
  opts.parallel = parallel;
  for (auto _ : state) benchmark::DoNotOptimize(run_matched_experiment(cfg.protocols, cells, opts));
}

void BM_Bootstrap(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  CounterRng rng(1, {});
  std::vector<double> v;
  std::vector<std::string> s;
  for (int i = 0; i < 200; ++i) {
    v.push_back(rng.normal());
    s.push_back(std::string(1, static_cast<char>('A' + i % 4)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(stratified_bootstrap(v, s, 9999, 7, parallel));
}

}  // namespace

// Arg 0 is the serial reference, 1 the OpenMP path.
BENCHMARK(BM_BuildCells)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MatchedExperiment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Bootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
