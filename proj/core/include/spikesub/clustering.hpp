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

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spikesub/labels.hpp"
#include "spikesub/subspace.hpp"

namespace spikesub {

struct KMeansResult {
  LabelAssignment assignment;
  Eigen::MatrixXd centroids;  // d x K
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;           // reached a label fixed point before max_iter
  std::vector<double> sse_history;  // SSE after each centroid update
};

// Derived seed for the r-th repetition of a seeded routine; r = 0 returns the
// seed unchanged.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t r);

// Sum of squared distances of each point to the mean of its cluster.
double partition_sse(const Eigen::MatrixXd& features, const LabelAssignment& labels);

// Lloyd iterations from k-means++ seeding. Empty clusters are re-seeded with
// the point farthest from its centroid. Labels are returned in order of first
// appearance.
KMeansResult kmeans(const Eigen::MatrixXd& features, int k, std::uint64_t seed, int max_iter = 300);

// Lloyd iterations from explicit initial centroids (d x K).
KMeansResult kmeans_from(const Eigen::MatrixXd& features, const Eigen::MatrixXd& init_centroids,
                         int max_iter = 300);

// Best-of-n k-means. Restart r uses seed ^ r; the minimum-SSE run wins and
// ties go to the lowest restart index. A warm-start partition, when given,
// competes as one extra run (Lloyd from its centroids), so the result never
// has higher SSE than the warm start.
KMeansResult kmeans_restarts(const Eigen::MatrixXd& features, int k, int n_restarts, std::uint64_t seed,
                             int max_iter = 300, const LabelAssignment* warm_start = nullptr);

// Rotates and scales d x n centered features so their total scatter is the
// identity. Nearly singular directions are floored at 1e-12 of the largest
// eigenvalue.
Eigen::MatrixXd whiten_features(const Eigen::MatrixXd& y);

struct LdaKmConfig {
  int k = 2;
  int d = 1;
  std::uint64_t seed = 0;
  int max_outer = 50;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;
  double shrinkage = ScatterPair::kDefaultShrinkage;
  // Starting partition with k clusters. When set, the first subspace is the
  // ratio-trace LDA of this partition (PCA if that is degenerate) and the
  // partition competes in the first k-means step; otherwise W starts at PCA.
  std::optional<LabelAssignment> init_labels;
};

// One alternation of LDA-Km. SSE values are measured in the whitened feature
// space the k-means step ran in. The objective is ratio_trace_objective and
// the trace ratio is tr(W^T S_b W) / tr(W^T S_w' W), both on the scatter of
// the new labels, before (previous subspace) and after the LDA step.
struct LdaKmStep {
  double sse_previous_labels = 0.0;  // NaN on the first step
  double sse_new_labels = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  double trace_ratio_before = 0.0;
  double trace_ratio_after = 0.0;
  bool lda_updated = false;  // false when the previous subspace was kept
};

struct LdaKmResult {
  LabelAssignment assignment;
  Projection projection;
  Eigen::MatrixXd features;  // d x n
  double trace_ratio = 0.0;
  double objective = 0.0;  // ratio_trace_objective of the final (W, L)
  int outer_iterations = 0;
  bool converged = false;
  bool degenerate = false;
  std::vector<LdaKmStep> steps;
};

// Alternates k-means in the current subspace with ratio-trace LDA on the
// resulting labels, starting from the PCA basis, until the partition repeats
// or max_outer is reached. k-means runs on the subspace coordinates whitened
// by their total scatter, so with W fixed it maximizes
// tr((W^T S_t W)^-1 W^T S_b W); the LDA step maximizes the same quantity with
// the labels fixed. Neither step lowers it. `features` holds the whitened
// coordinates and the returned labels are always their k-means fixed point.
LdaKmResult lda_km(const Eigen::MatrixXd& x, const LdaKmConfig& cfg);
inline LdaKmResult lda_km(const SpikeMatrix& x, const LdaKmConfig& cfg) { return lda_km(x.data, cfg); }

// Runs lda_km for n_starts derived seeds from PCA, plus one run from each
// extra initial partition (concurrently), and keeps the best: non-degenerate
// before degenerate, converged before not, then the highest objective, then
// the lowest start index.
LdaKmResult lda_km_best(const Eigen::MatrixXd& x, const LdaKmConfig& cfg, int n_starts,
                        std::span<const LabelAssignment> extra_inits = {});

}  // namespace spikesub
