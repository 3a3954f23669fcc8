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

#include <cstddef>
#include <vector>

namespace spikesub {

inline constexpr int kOutlierLabel = -1;

// Per-spike cluster labels; equivalent to an n x K indicator matrix with a
// reserved outlier label that belongs to no column.
struct LabelAssignment {
  std::vector<int> labels;
  int k = 1;

  std::size_t size() const { return labels.size(); }

  // Throws DataFormat if k < 1 or any label lies outside [0, k) u {-1}.
  void validate() const;

  // Number of members per cluster (outliers not counted).
  std::vector<std::size_t> counts() const;

  std::size_t outlier_count() const;

  // Number of distinct non-outlier labels actually used.
  int distinct_clusters() const;
};

// Relabels clusters in order of first appearance so that two partitions that
// differ only by a label permutation compare equal. Outliers are preserved and
// k shrinks to the number of used labels (minimum 1).
LabelAssignment canonicalize(const LabelAssignment& a);

// True when both assignments induce the same partition.
bool same_partition(const LabelAssignment& a, const LabelAssignment& b);

}  // namespace spikesub
