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
#include <random>
#include <vector>

#include "spikesub/labels.hpp"
#include "spikesub/spike_io.hpp"
#include "spikesub/synth.hpp"

namespace spikesub::testing {

// Gaussian blobs: column j of `centers` is a cluster mean, `sizes[j]` points
// each, isotropic noise of SD `sd`. Points are interleaved by cluster.
struct Blobs {
  Eigen::MatrixXd x;
  std::vector<int> labels;
};
Blobs make_blobs(const Eigen::MatrixXd& centers, const std::vector<int>& sizes, double sd, std::uint64_t seed);

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng);
Eigen::MatrixXd random_orthogonal(int m, std::mt19937_64& rng);
LabelAssignment random_labels(int n, int k, std::mt19937_64& rng);  // every label used

// Spikes cut at the ground-truth peak times of a synthetic recording.
struct SynthSpikes {
  SpikeMatrix x;
  SynthDataset ds;
};
SynthSpikes synth_spikes(int templates, double sigma, double duration_s, std::uint64_t seed,
                         TemplateMode mode = TemplateMode::Hard);

// Two tight clusters in 8-D plus `stragglers` isolated far points.
Blobs outlier_fixture(int per_cluster, int stragglers, std::uint64_t seed);

}  // namespace spikesub::testing
