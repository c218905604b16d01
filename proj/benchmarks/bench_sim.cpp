/*
 * Copyright (c) 2026, the cxlsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include "cxlsim/explore.hpp"
#include "cxlsim/sim.hpp"

using namespace cxlsim;

namespace {

void BM_mem_sim_1r0w(benchmark::State& state) {
  SimConfig cfg;
  cfg.link.flit_mode = static_cast<FlitMode>(state.range(0));
  WorkloadSpec w;
  w.lines = 2000;
  for (auto _ : state) {
    SimResult r = run_mem_sim(cfg, w);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * w.lines);
}
BENCHMARK(BM_mem_sim_1r0w)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_explore_depth(benchmark::State& state) {
  ExploreConfig cfg;
  cfg.depth = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    ExploreReport r = explore(cfg);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_explore_depth)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
