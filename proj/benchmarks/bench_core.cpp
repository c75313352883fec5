// Copyright 2026 The feelsim Authors. All Rights Reserved.
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
// =============================================================================

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "feelsim/allocation.hpp"
#include "feelsim/channel.hpp"
#include "feelsim/compression.hpp"
#include "feelsim/learning.hpp"
#include "feelsim/mask.hpp"
#include "feelsim/rng.hpp"

namespace {

using namespace feelsim;

ParamVector gaussian(std::size_t d, std::uint64_t seed) {
  RngStream rng(seed, {});
  ParamVector x(d);
  for (auto& v : x) v = rng.normal();
  return x;
}

void BM_TopKMask(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const ParamVector x = gaussian(d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(top_k_mask(x, d / 5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d));
}
BENCHMARK(BM_TopKMask)->Arg(1000)->Arg(100000)->Arg(1000000);

void BM_Quantize(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const ParamVector x = gaussian(k, 2);
  std::vector<std::size_t> pos(k);
  std::iota(pos.begin(), pos.end(), 0);
  const SparseUpdate u{MaskVector(k, pos), std::vector<double>(x.begin(), x.end())};
  RngStream rng(3, {});
  for (auto _ : state) benchmark::DoNotOptimize(quantize(u, 16, rng));
}
BENCHMARK(BM_Quantize)->Arg(12945);

void BM_WaterFill(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  RngStream rng(4, {});
  std::vector<double> gains(k);
  for (auto& g : gains) g = 0.1 + 1.9 * rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(water_fill(gains, 1e-6, 5.0));
}
BENCHMARK(BM_WaterFill)->Arg(8)->Arg(64);

void BM_BottleneckMatching(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(5, {});
  WeightMatrix w(n, n + n / 4);
  for (auto& v : w.data) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(bottleneck_matching(w));
}
BENCHMARK(BM_BottleneckMatching)->Arg(20)->Arg(100);

void BM_AllocateRound(benchmark::State& state) {
  RngStream rng(6, {});
  const ChannelRealization ch = draw_channel(20, 25, 1e-6, rng);
  std::vector<std::size_t> scheduled(20);
  std::iota(scheduled.begin(), scheduled.end(), 0);
  const std::vector<double> budget(20, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(allocate_round(scheduled, ch, budget, 34 * 50, 8));
}
BENCHMARK(BM_AllocateRound);

void BM_LocalSgd(benchmark::State& state) {
  RngStream data_rng(7, {});
  const Dataset data = synthesize_dataset(10, 200, 20, 3.0, data_rng);
  const ModelSpec model;
  RngStream init(8, {});
  const ParamVector w = init_params(model, init);
  RngStream rng(9, {});
  for (auto _ : state) benchmark::DoNotOptimize(local_sgd(model, w, data, 10, 64, 0.05, rng));
}
BENCHMARK(BM_LocalSgd);

}  // namespace

BENCHMARK_MAIN();
