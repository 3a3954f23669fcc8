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


#include "fixtures.hpp"

#include <numeric>

namespace spikesub::testing {

Blobs make_blobs(const Eigen::MatrixXd& centers, const std::vector<int>& sizes, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  const int n = std::accumulate(sizes.begin(), sizes.end(), 0);
  Blobs b;
  b.x.resize(centers.rows(), n);
  std::vector<int> left(sizes);
  int col = 0;
  while (col < n) {
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (left[c] == 0) continue;
      --left[c];
      for (Eigen::Index r = 0; r < centers.rows(); ++r) b.x(r, col) = centers(r, static_cast<Eigen::Index>(c)) + g(rng);
      b.labels.push_back(static_cast<int>(c));
      ++col;
    }
  }
  return b;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = g(rng);
  return a;
}

Eigen::MatrixXd random_orthogonal(int m, std::mt19937_64& rng) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(m, m, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
}

LabelAssignment random_labels(int n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, k - 1);
  LabelAssignment a;
  a.k = k;
  a.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a.labels[static_cast<std::size_t>(i)] = i < k ? i : u(rng);
  std::shuffle(a.labels.begin(), a.labels.end(), rng);
  return a;
}

SynthSpikes synth_spikes(int templates, double sigma, double duration_s, std::uint64_t seed, TemplateMode mode) {
  SynthConfig c;
  c.templates = default_templates(64, templates, mode);
  c.noise_sigma = sigma;
  c.duration_s = duration_s;
  c.seed = seed;
  SynthSpikes s;
  s.ds = generate(c);
  DetectionConfig dc;
  dc.pre_peak = c.peak_index;
  dc.post_peak = 63 - c.peak_index;
  s.x = extract_aligned(s.ds.signal, s.ds.truth_times, dc);
  return s;
}

Blobs outlier_fixture(int per_cluster, int stragglers, std::uint64_t seed) {
  constexpr int kDim = 8;
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(kDim, 2);
  centers(0, 0) = -10.0;
  centers(0, 1) = 10.0;
  Blobs b = make_blobs(centers, {per_cluster, per_cluster}, 1.0, seed);
  // Stragglers sit far out along distinct axes so none of them group.
  const Eigen::Index n0 = b.x.cols();
  b.x.conservativeResize(kDim, n0 + stragglers);
  for (int s = 0; s < stragglers; ++s) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(kDim);
    p(1 + s % (kDim - 1)) = (s % 2 == 0 ? 1.0 : -1.0) * (60.0 + 15.0 * s);
    p(0) = (s % 3 - 1) * 25.0;
    b.x.col(n0 + s) = p;
    b.labels.push_back(-1);
  }
  return b;
}

}  // namespace spikesub::testing
