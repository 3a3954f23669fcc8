/*
 * Copyright 2026 The spikesub Authors
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

#include "spikesub/clustering.hpp"
#include "spikesub/sorters.hpp"
#include "spikesub/subspace.hpp"
#include "spikesub/synth.hpp"

using namespace spikesub;

namespace {

// Hard three-unit recording cut at its truth peaks; `seconds` sets n.
SpikeMatrix spikes(double seconds, double sigma = 0.1) {
  SynthConfig c;
  c.templates = default_templates(64, 3);
  c.duration_s = seconds;
  c.noise_sigma = sigma;
  c.seed = 1;
  const SynthDataset ds = generate(c);
  DetectionConfig dc;
  return extract_aligned(ds.signal, ds.truth_times, dc);
}

void BM_Scatter(benchmark::State& st) {
  const SpikeMatrix x = spikes(static_cast<double>(st.range(0)));
  LabelAssignment l;
  for (int i = 0; i < x.n(); ++i) l.labels.push_back(i % 3);
  l.k = 3;
  for (auto _ : st) benchmark::DoNotOptimize(scatter(x.data, l));
  st.SetItemsProcessed(st.iterations() * x.n());
}
BENCHMARK(BM_Scatter)->Arg(10)->Arg(60)->Unit(benchmark::kMicrosecond);

void BM_KMeans(benchmark::State& st) {
  const SpikeMatrix x = spikes(static_cast<double>(st.range(0)));
  const Eigen::MatrixXd y = project(x.data, pca_basis(x.data, 2));
  for (auto _ : st) benchmark::DoNotOptimize(kmeans_restarts(y, 3, 10, 1));
  st.SetItemsProcessed(st.iterations() * x.n());
}
BENCHMARK(BM_KMeans)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_LdaKm(benchmark::State& st) {
  const SpikeMatrix x = spikes(static_cast<double>(st.range(0)));
  LdaKmConfig c;
  c.k = 3;
  c.d = 2;
  c.seed = 1;
  for (auto _ : st) benchmark::DoNotOptimize(lda_km(x.data, c));
}
BENCHMARK(BM_LdaKm)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_SortAlgo2(benchmark::State& st) {
  const SpikeMatrix x = spikes(static_cast<double>(st.range(0)), 0.2);
  Algo2Config c;
  c.seed = 1;
  for (auto _ : st) benchmark::DoNotOptimize(sort_algo2(x, c));
}
BENCHMARK(BM_SortAlgo2)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
