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
#include <optional>
#include <vector>

#include "spikesub/labels.hpp"
#include "spikesub/spike_io.hpp"

namespace spikesub {

// m x d basis W with orthonormal columns; Y = W^T X.
struct Projection {
  Eigen::MatrixXd basis;
  // Set when the between-cluster scatter vanished and the basis carries no
  // discriminative information. Sorters read this as "no split found".
  bool degenerate = false;

  int d() const { return static_cast<int>(basis.cols()); }
  int m() const { return static_cast<int>(basis.rows()); }
};

// Within- and between-cluster scatter of globally centered data.
//
//   within  = sum_k sum_{x in C_k} (x - mu_k)(x - mu_k)^T
//   between = sum_k n_k mu_k mu_k^T
//
// Centroids are expressed in centered coordinates, so within + between equals
// the total scatter X_c X_c^T. Outlier-labelled columns are ignored entirely,
// including for the global mean.
struct ScatterPair {
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
  Eigen::MatrixXd centroids;  // m x K
  std::vector<std::size_t> counts;

  int k() const { return static_cast<int>(counts.size()); }

  // S_w + eps * tr(S_w) / m * I. Falls back to eps * I when S_w vanishes.
  Eigen::MatrixXd regularized_within(double eps = kDefaultShrinkage) const;

  static constexpr double kDefaultShrinkage = 1e-6;
};

// Column mean (over spikes) and the centered copy of x.
Eigen::VectorXd column_mean(const Eigen::MatrixXd& x);
Eigen::MatrixXd center(const Eigen::MatrixXd& x);

ScatterPair scatter(const Eigen::MatrixXd& x, const LabelAssignment& labels);
inline ScatterPair scatter(const SpikeMatrix& x, const LabelAssignment& labels) {
  return scatter(x.data, labels);
}

// Top-d eigenvectors of the sample covariance, eigenvalue-descending, with the
// largest-magnitude entry of each column made positive.
Projection pca_basis(const Eigen::MatrixXd& x, int d);
inline Projection pca_basis(const SpikeMatrix& x, int d) { return pca_basis(x.data, d); }

// tr(W^T S_b W) / tr(W^T S_w' W) with S_w' the regularized within scatter.
double trace_ratio(const ScatterPair& s, const Eigen::MatrixXd& basis,
                   double shrinkage = ScatterPair::kDefaultShrinkage);

// tr((W^T S_t W)^-1 W^T S_b W) with S_t = S_w + S_b, the criterion ratio-trace
// LDA maximizes. Depends only on the span of W; lies in [0, d]. Directions
// with vanishing total scatter are dropped.
double ratio_trace_objective(const ScatterPair& s, const Eigen::MatrixXd& basis);

// Ratio-trace LDA: top-d generalized eigenvectors of (S_b, S_w'), then
// re-orthonormalized. Throws "LDA rank limit" when d > K - 1.
Projection lda_ratio_trace(const ScatterPair& s, int d,
                           double shrinkage = ScatterPair::kDefaultShrinkage);

struct ItrOptions {
  double tol = 1e-8;
  int max_iter = 100;
  double shrinkage = ScatterPair::kDefaultShrinkage;
  std::optional<Eigen::MatrixXd> init;  // defaults to the ratio-trace solution
};

struct ItrResult {
  Projection projection;
  double trace_ratio = 0.0;
  std::vector<double> lambdas;  // lambda_0 (initial basis) .. lambda_T
  int iterations = 0;
  bool converged = false;
};

// Iterative trace-ratio solver: lambda <- ratio(W), W <- top-d eigenvectors
// of S_b - lambda S_w'. Returns the best basis seen; non-convergence within
// max_iter is reported through `converged`, not thrown.
ItrResult itr_trace_ratio(const ScatterPair& s, int d, const ItrOptions& opts = {});

// Y = W^T (X - mean(X)).
Eigen::MatrixXd project(const Eigen::MatrixXd& x, const Projection& p);
inline Eigen::MatrixXd project(const SpikeMatrix& x, const Projection& p) { return project(x.data, p); }

// Flip each column so that its largest-magnitude entry is positive.
void fix_signs(Eigen::MatrixXd& basis);

}  // namespace spikesub
