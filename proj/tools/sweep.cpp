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


#include "sweep.hpp"

#include <algorithm>
#include <chrono>

#include "spikesub/error.hpp"
#include "spikesub/eval.hpp"
#include "spikesub/sorters.hpp"

namespace spikesub::cli {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string mode_name(TemplateMode mode) { return mode == TemplateMode::Hard ? "hard" : "easy"; }

TemplateMode parse_mode(const std::string& name) {
  if (name == "hard") return TemplateMode::Hard;
  if (name == "easy") return TemplateMode::Easy;
  fail(ErrorKind::InvalidArgument, "unknown template mode '" + name + "'");
}

CellResult run_cell(const CellOptions& opts) {
  SynthConfig sc;
  sc.templates = default_templates(64, opts.templates, opts.mode);
  sc.noise_sigma = opts.sigma;
  sc.duration_s = opts.duration_s;
  sc.seed = opts.seed;
  const SynthDataset ds = generate(sc);

  DetectionConfig dc;
  dc.pre_peak = sc.peak_index;
  dc.post_peak = 64 - sc.peak_index - 1;
  const SpikeMatrix x = extract_aligned(ds.signal, ds.truth_times, dc);

  auto score = [&](const SortResult& r) {
    return match_and_score(r.assignment, ds.truth_labels, ds.overlap_flags).accuracy_pct;
  };

  CellResult out;
  out.n = x.n();
  out.overlap_fraction = static_cast<double>(std::count(ds.overlap_flags.begin(), ds.overlap_flags.end(), true)) /
                         static_cast<double>(std::max(1, x.n()));

  Algo1Config a1;
  a1.seed = opts.seed;
  auto t0 = std::chrono::steady_clock::now();
  const SortResult r1 = sort_algo1(x, a1);
  out.algo1_seconds = seconds_since(t0);
  out.algo1_k = r1.detected_k;
  out.algo1_d = static_cast<int>(r1.features.rows());
  out.algo1_acc = score(r1);

  Algo2Config a2;
  a2.seed = opts.seed;
  t0 = std::chrono::steady_clock::now();
  const SortResult r2 = sort_algo2(x, a2);
  out.algo2_seconds = seconds_since(t0);
  out.algo2_k = r2.detected_k;
  out.algo2_d = static_cast<int>(r2.features.rows());
  out.algo2_acc = score(r2);
  out.algo2_outliers = r2.assignment.outlier_count();

  out.pca_high_acc = score(sort_pca_kmeans(x, opts.templates, opts.pca_d_high, opts.seed));
  out.pca_low_acc = score(sort_pca_kmeans(x, opts.templates, opts.pca_d_low, opts.seed));
  return out;
}

}  // namespace spikesub::cli
