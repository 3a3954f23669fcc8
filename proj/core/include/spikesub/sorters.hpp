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
#include <string>
#include <vector>

#include "spikesub/density.hpp"
#include "spikesub/labels.hpp"
#include "spikesub/spike_io.hpp"
#include "spikesub/subspace.hpp"

namespace spikesub {

struct PeakCount {
  int k = 0;
  int peaks = 0;
};

struct Algo1Diagnostics {
  int pca_peaks = 0;                // peaks of the 1-D PCA histogram
  std::vector<PeakCount> trace;     // (K, P_K) in evaluation order
  bool single_cluster = false;      // K = 1 by the PCA + P_2 rule
  bool stopped_by_rule = false;     // P_K = P_{K-1} < K fired
  bool stopped_twice_below = false; // P_K < K on two consecutive K
  bool cap_hit = false;             // reached k_max without a stop
  int accepted_k = 0;
};

enum class NodeMark { Final, Split, Outlier };

struct SplitNode {
  int id = 0;       // heap numbering: children of i are 2i+1 and 2i+2
  int parent = -1;
  int depth = 0;
  std::size_t size = 0;
  double ad = 0.0;  // NaN when no split was attempted
  NodeMark mark = NodeMark::Final;
  bool degenerate = false;  // split attempt found no discriminative direction
  bool depth_capped = false;
  int label = -1;           // final label for Final nodes, else -1
};

struct Algo2Diagnostics {
  std::vector<SplitNode> nodes;  // in processing order
  int min_cluster_size = 0;
  bool depth_cap_hit = false;
  std::size_t distance_outliers = 0;
};

struct SortResult {
  std::string algorithm;
  LabelAssignment assignment;
  int detected_k = 0;
  Projection projection;
  Eigen::MatrixXd features;  // d x n
  std::optional<Algo1Diagnostics> algo1;
  std::optional<Algo2Diagnostics> algo2;
};

struct Algo1Config {
  int d_max = 2;
  int k_max = 10;
  std::uint64_t seed = 0;
  HistogramConfig histogram;
  PeakConfig peaks;
  int kmeans_restarts = 10;
  int lda_km_starts = 4;
  int max_outer = 50;

  void validate() const;
};

struct Algo2Config {
  double ad_threshold = 40.0;
  int min_cluster_size = 0;  // 0 selects max(15, ceil(0.01 n))
  int max_depth = 10;
  std::uint64_t seed = 0;
  int kmeans_restarts = 10;
  int lda_km_starts = 4;
  int max_outer = 50;
  // Optional rule: points farther than distance_sd standard deviations from
  // their cluster mean in the final 1-D projection become outliers.
  bool distance_rule = false;
  double distance_sd = 4.0;

  void validate() const;
  int resolved_min_cluster_size(std::size_t n) const;
};

// Counts K upward from 2, running LDA-Km and counting histogram peaks of the
// 1-D trace-ratio projection of its labels, until P_K = P_{K-1} < K.
SortResult sort_algo1(const SpikeMatrix& spikes, const Algo1Config& cfg);
SortResult sort_algo1(const Eigen::MatrixXd& x, const Algo1Config& cfg);

// Divisive clustering: each working set is split in two by 1-D LDA-Km and
// kept whole when the Anderson-Darling score of its projection is below the
// threshold. Children under the minimum size become outliers.
SortResult sort_algo2(const SpikeMatrix& spikes, const Algo2Config& cfg);
SortResult sort_algo2(const Eigen::MatrixXd& x, const Algo2Config& cfg);

// PCA to d dimensions followed by best-of-restarts k-means.
SortResult sort_pca_kmeans(const SpikeMatrix& spikes, int k, int d, std::uint64_t seed, int restarts = 10);
SortResult sort_pca_kmeans(const Eigen::MatrixXd& x, int k, int d, std::uint64_t seed, int restarts = 10);

std::string to_string(NodeMark mark);

}  // namespace spikesub
