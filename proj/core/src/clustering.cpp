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

#include "spikesub/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <string>

#include "spikesub/error.hpp"

namespace spikesub {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t r) {
  if (r == 0) return seed;
  // splitmix64 finalizer
  std::uint64_t z = seed + r * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double partition_sse(const Eigen::MatrixXd& features, const LabelAssignment& labels) {
  require(static_cast<Eigen::Index>(labels.size()) == features.cols(), "label count does not match point count");
  const Eigen::Index d = features.rows();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, labels.k);
  std::vector<double> counts(static_cast<std::size_t>(labels.k), 0.0);
  for (Eigen::Index i = 0; i < features.cols(); ++i) {
    const int l = labels.labels[static_cast<std::size_t>(i)];
    if (l < 0) continue;
    sums.col(l) += features.col(i);
    counts[static_cast<std::size_t>(l)] += 1.0;
  }
  for (int c = 0; c < labels.k; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0) sums.col(c) /= counts[static_cast<std::size_t>(c)];
  double sse = 0.0;
  for (Eigen::Index i = 0; i < features.cols(); ++i) {
    const int l = labels.labels[static_cast<std::size_t>(i)];
    if (l >= 0) sse += (features.col(i) - sums.col(l)).squaredNorm();
  }
  return sse;
}

namespace {

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& x, int k, std::uint64_t seed) {
  const Eigen::Index n = x.cols();
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd c(x.rows(), k);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  c.col(0) = x.col(pick(rng));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = (x.col(i) - c.col(0)).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (double v : dist) total += v;
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist[static_cast<std::size_t>(i)];
        if (acc > target && dist[static_cast<std::size_t>(i)] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    c.col(j) = x.col(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      dist[static_cast<std::size_t>(i)] = std::min(dist[static_cast<std::size_t>(i)], (x.col(i) - c.col(j)).squaredNorm());
  }
  return c;
}

// Relabels in order of first appearance and permutes the centroids to match.
void canonicalize_result(KMeansResult& r) {
  const int k = r.assignment.k;
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int l : r.assignment.labels)
    if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
  for (int c = 0; c < k; ++c)
    if (remap[static_cast<std::size_t>(c)] < 0) remap[static_cast<std::size_t>(c)] = next++;
  Eigen::MatrixXd cent(r.centroids.rows(), k);
  for (int c = 0; c < k; ++c) cent.col(remap[static_cast<std::size_t>(c)]) = r.centroids.col(c);
  r.centroids = std::move(cent);
  for (int& l : r.assignment.labels) l = remap[static_cast<std::size_t>(l)];
}

KMeansResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centroids, int max_iter) {
  const Eigen::Index n = x.cols();
  const int k = static_cast<int>(centroids.cols());
  KMeansResult r;
  r.assignment.k = k;
  r.assignment.labels.assign(static_cast<std::size_t>(n), -1);
  auto& labels = r.assignment.labels;
  std::vector<double> cost(static_cast<std::size_t>(n), 0.0);

  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      int best = labels[ui];
      double best_d = best >= 0 ? (x.col(i) - centroids.col(best)).squaredNorm() : std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dd = (x.col(i) - centroids.col(c)).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (best != labels[ui]) {
        labels[ui] = best;
        changed = true;
      }
      cost[ui] = best_d;
    }
    if (!changed && it > 0) {
      r.converged = true;
      break;
    }

    // Update step, with farthest-point repair of empty clusters.
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (counts[static_cast<std::size_t>(labels[ui])] > 1 && cost[ui] > far_d) {
          far_d = cost[ui];
          far = i;
        }
      }
      if (far < 0) break;
      --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = c;
      cost[static_cast<std::size_t>(far)] = 0.0;
      ++counts[static_cast<std::size_t>(c)];
    }
    centroids.setZero();
    for (Eigen::Index i = 0; i < n; ++i) centroids.col(labels[static_cast<std::size_t>(i)]) += x.col(i);
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0) centroids.col(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);

    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sse += (x.col(i) - centroids.col(labels[static_cast<std::size_t>(i)])).squaredNorm();
    r.sse_history.push_back(sse);
    r.iterations = it + 1;
  }
  r.centroids = std::move(centroids);
  r.sse = r.sse_history.empty() ? partition_sse(x, r.assignment) : r.sse_history.back();
  canonicalize_result(r);
  return r;
}

}  // namespace

KMeansResult kmeans_from(const Eigen::MatrixXd& features, const Eigen::MatrixXd& init_centroids, int max_iter) {
  require(init_centroids.rows() == features.rows(), "centroid dimension does not match features");
  require(init_centroids.cols() >= 1, "k must be >= 1");
  require(init_centroids.cols() <= features.cols(), "k exceeds number of points");
  require(max_iter >= 1, "max_iter must be >= 1");
  return lloyd(features, init_centroids, max_iter);
}

KMeansResult kmeans(const Eigen::MatrixXd& features, int k, std::uint64_t seed, int max_iter) {
  require(k >= 1, "k must be >= 1");
  if (k > features.cols())
    fail(ErrorKind::InvalidArgument, "k=" + std::to_string(k) + " exceeds number of points n=" + std::to_string(features.cols()));
  require(max_iter >= 1, "max_iter must be >= 1");
  return lloyd(features, kmeanspp_init(features, k, seed), max_iter);
}

KMeansResult kmeans_restarts(const Eigen::MatrixXd& features, int k, int n_restarts, std::uint64_t seed, int max_iter,
                             const LabelAssignment* warm_start) {
  require(n_restarts >= 1, "n_restarts must be >= 1");
  KMeansResult best = kmeans(features, k, seed, max_iter);
  for (int r = 1; r < n_restarts; ++r) {
    KMeansResult cur = kmeans(features, k, seed ^ static_cast<std::uint64_t>(r), max_iter);
    if (cur.sse < best.sse) best = std::move(cur);
  }
  if (warm_start && warm_start->k == k) {
    require(static_cast<Eigen::Index>(warm_start->size()) == features.cols(), "warm start has the wrong length");
    Eigen::MatrixXd init = Eigen::MatrixXd::Zero(features.rows(), k);
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
      const int l = warm_start->labels[static_cast<std::size_t>(i)];
      if (l < 0) continue;
      init.col(l) += features.col(i);
      counts[static_cast<std::size_t>(l)] += 1.0;
    }
    bool usable = true;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0.0) usable = false;
      else init.col(c) /= counts[static_cast<std::size_t>(c)];
    }
    if (usable) {
      KMeansResult cur = kmeans_from(features, init, max_iter);
      if (cur.sse < best.sse) best = std::move(cur);
    }
  }
  return best;
}

Eigen::MatrixXd whiten_features(const Eigen::MatrixXd& y) {
  const Eigen::Index d = y.rows();
  const double n = static_cast<double>(std::max<Eigen::Index>(y.cols(), 1));
  const Eigen::MatrixXd cov = y * y.transpose() / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) fail(ErrorKind::Numerical, "whitening eigendecomposition failed");
  const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  if (!(top > 0.0)) return y;
  Eigen::VectorXd inv_sqrt(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double ev = std::max(es.eigenvalues()[i], 1e-12 * top);
    inv_sqrt[i] = 1.0 / std::sqrt(ev);
  }
  const Eigen::MatrixXd a = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
  return a * y;
}

LdaKmResult lda_km(const Eigen::MatrixXd& x, const LdaKmConfig& cfg) {
  require(cfg.k >= 2, "LDA-Km needs k >= 2");
  require(cfg.d >= 1 && cfg.d <= cfg.k - 1, "LDA-Km needs 1 <= d <= k-1");
  require(x.cols() >= cfg.k, "LDA-Km needs at least k spikes");
  require(cfg.max_outer >= 1, "max_outer must be >= 1");

  const Eigen::MatrixXd xc = center(x);
  LdaKmResult r;
  if (xc.norm() <= 1e-10 * std::max(x.norm(), 1e-300)) {
    // Identical columns: whitening would only amplify centering roundoff.
    r.assignment.labels.assign(static_cast<std::size_t>(x.cols()), 0);
    r.assignment.k = cfg.k;
    r.projection = pca_basis(x, cfg.d);
    r.projection.degenerate = true;
    r.features = Eigen::MatrixXd::Zero(cfg.d, x.cols());
    r.degenerate = true;
    return r;
  }
  std::optional<LabelAssignment> prev;
  r.projection = pca_basis(x, cfg.d);
  if (cfg.init_labels) {
    require(static_cast<Eigen::Index>(cfg.init_labels->size()) == x.cols(), "initial partition has the wrong length");
    const LabelAssignment init = canonicalize(*cfg.init_labels);
    require(init.k == cfg.k && init.outlier_count() == 0, "initial partition must use exactly k clusters");
    const Projection p0 = lda_ratio_trace(scatter(x, init), cfg.d, cfg.shrinkage);
    if (!p0.degenerate) r.projection = p0;
    prev = init;
  }

  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    r.outer_iterations = outer;
    const Eigen::MatrixXd y = whiten_features(r.projection.basis.transpose() * xc);
    KMeansResult km = kmeans_restarts(y, cfg.k, cfg.kmeans_restarts, cfg.seed, cfg.kmeans_max_iter,
                                      prev ? &*prev : nullptr);
    LdaKmStep step;
    step.sse_previous_labels = prev ? partition_sse(y, *prev) : std::numeric_limits<double>::quiet_NaN();
    step.sse_new_labels = km.sse;

    if (prev && same_partition(*prev, km.assignment)) {
      r.steps.push_back(step);
      r.assignment = std::move(km.assignment);
      r.converged = true;
      break;
    }
    r.assignment = std::move(km.assignment);
    if (outer == cfg.max_outer) {
      r.steps.push_back(step);
      break;
    }

    const ScatterPair s = scatter(x, r.assignment);
    const Projection rt = lda_ratio_trace(s, cfg.d, cfg.shrinkage);
    if (rt.degenerate) {
      r.steps.push_back(step);
      r.degenerate = true;
      break;
    }
    step.objective_before = ratio_trace_objective(s, r.projection.basis);
    step.trace_ratio_before = trace_ratio(s, r.projection.basis, cfg.shrinkage);
    Projection chosen = rt;
    step.objective_after = ratio_trace_objective(s, rt.basis);
    if (step.objective_after < step.objective_before) {
      // Shrinkage can leave the new subspace a hair behind the old one.
      chosen = r.projection;
      step.objective_after = step.objective_before;
    } else {
      step.lda_updated = true;
    }
    step.trace_ratio_after = trace_ratio(s, chosen.basis, cfg.shrinkage);
    r.steps.push_back(step);
    r.projection = std::move(chosen);
    prev = r.assignment;
  }

  r.features = whiten_features(r.projection.basis.transpose() * xc);
  if (!r.degenerate) {
    const ScatterPair s = scatter(x, r.assignment);
    r.trace_ratio = trace_ratio(s, r.projection.basis, cfg.shrinkage);
    r.objective = ratio_trace_objective(s, r.projection.basis);
  }
  r.projection.degenerate = r.degenerate;
  return r;
}

LdaKmResult lda_km_best(const Eigen::MatrixXd& x, const LdaKmConfig& cfg, int n_starts,
                        std::span<const LabelAssignment> extra_inits) {
  require(n_starts >= 1, "n_starts must be >= 1");
  const std::size_t total = static_cast<std::size_t>(n_starts) + extra_inits.size();
  std::vector<std::future<LdaKmResult>> runs;
  runs.reserve(total);
  for (std::size_t s = 0; s < total; ++s) {
    LdaKmConfig c = cfg;
    c.seed = derive_seed(cfg.seed, s);
    if (s >= static_cast<std::size_t>(n_starts)) c.init_labels = extra_inits[s - static_cast<std::size_t>(n_starts)];
    runs.push_back(std::async(total > 1 ? std::launch::async : std::launch::deferred,
                              [&x, c = std::move(c)] { return lda_km(x, c); }));
  }
  auto better = [](const LdaKmResult& a, const LdaKmResult& b) {
    if (a.degenerate != b.degenerate) return !a.degenerate;
    if (a.converged != b.converged) return a.converged;
    return a.objective > b.objective;
  };
  LdaKmResult best = runs[0].get();
  for (std::size_t s = 1; s < total; ++s) {
    LdaKmResult cur = runs[s].get();
    if (better(cur, best)) best = std::move(cur);
  }
  return best;
}

}  // namespace spikesub
