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


#include "spikesub/sorters.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <string>

#include "spikesub/clustering.hpp"
#include "spikesub/error.hpp"

namespace spikesub {

namespace {

std::vector<double> row_values(const Eigen::MatrixXd& features, Eigen::Index row) {
  std::vector<double> v(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.cols(); ++i) v[static_cast<std::size_t>(i)] = features(row, i);
  return v;
}

int peaks_of(const std::vector<double>& values, const HistogramConfig& hc, const PeakConfig& pc) {
  return count_peaks(histogram(values, hc), pc);
}

// Most discriminative 1-D direction for a partition; PCA when it has a single
// cluster.
Projection one_d_projection(const Eigen::MatrixXd& x, const LabelAssignment& labels) {
  if (labels.distinct_clusters() < 2) return pca_basis(x, 1);
  const LabelAssignment canon = canonicalize(labels);
  return itr_trace_ratio(scatter(x, canon), 1).projection;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(idx[j]);
  return out;
}

// K-cluster starting partitions from a (K-1)-cluster one: each candidate
// splits one cluster in two with a 1-D LDA-Km on its members.
std::vector<LabelAssignment> split_candidates(const Eigen::MatrixXd& x, const LabelAssignment& prev,
                                              const LdaKmConfig& base) {
  constexpr std::size_t kMinSplitSize = 8;
  std::vector<LabelAssignment> out;
  const LabelAssignment canon = canonicalize(prev);
  for (int c = 0; c < canon.k; ++c) {
    std::vector<Eigen::Index> members;
    for (std::size_t i = 0; i < canon.size(); ++i)
      if (canon.labels[i] == c) members.push_back(static_cast<Eigen::Index>(i));
    if (members.size() < kMinSplitSize) continue;
    LdaKmConfig lc = base;
    lc.k = 2;
    lc.d = 1;
    lc.init_labels.reset();
    lc.seed = derive_seed(base.seed, 1000 + static_cast<std::uint64_t>(c));
    const LdaKmResult r = lda_km(gather(x, members), lc);
    if (r.degenerate) continue;
    LabelAssignment cand = canon;
    cand.k = canon.k + 1;
    for (std::size_t j = 0; j < members.size(); ++j)
      if (r.assignment.labels[j] == 1) cand.labels[static_cast<std::size_t>(members[j])] = canon.k;
    out.push_back(std::move(cand));
  }
  return out;
}

}  // namespace

std::string to_string(NodeMark mark) {
  switch (mark) {
    case NodeMark::Final: return "final";
    case NodeMark::Split: return "split";
    case NodeMark::Outlier: return "outlier";
  }
  return "unknown";
}

void Algo1Config::validate() const {
  require(d_max >= 1, "d_max must be >= 1");
  require(k_max >= 2, "k_max must be >= 2");
  require(kmeans_restarts >= 1, "kmeans_restarts must be >= 1");
  require(lda_km_starts >= 1, "lda_km_starts must be >= 1");
  require(max_outer >= 1, "max_outer must be >= 1");
}

void Algo2Config::validate() const {
  require(std::isfinite(ad_threshold) && ad_threshold > 0.0, "ad_threshold must be > 0");
  require(min_cluster_size == 0 || min_cluster_size >= 2, "min_cluster_size must be >= 2");
  require(max_depth >= 0, "max_depth must be >= 0");
  require(kmeans_restarts >= 1, "kmeans_restarts must be >= 1");
  require(lda_km_starts >= 1, "lda_km_starts must be >= 1");
  require(max_outer >= 1, "max_outer must be >= 1");
  require(distance_sd > 0.0, "distance_sd must be > 0");
}

int Algo2Config::resolved_min_cluster_size(std::size_t n) const {
  if (min_cluster_size > 0) return min_cluster_size;
  return std::max(15, static_cast<int>(std::ceil(0.01 * static_cast<double>(n))));
}

// --- Algorithm 1 ------------------------------------------------------------

SortResult sort_algo1(const SpikeMatrix& spikes, const Algo1Config& cfg) { return sort_algo1(spikes.data, cfg); }

SortResult sort_algo1(const Eigen::MatrixXd& x, const Algo1Config& cfg) {
  cfg.validate();
  const Eigen::Index n = x.cols();
  if (n < 20) fail(ErrorKind::InvalidArgument, "Algorithm 1 needs at least 20 spikes, got " + std::to_string(n));

  Algo1Diagnostics diag;
  const Projection pca1 = pca_basis(x, 1);
  diag.pca_peaks = peaks_of(row_values(project(x, pca1), 0), cfg.histogram, cfg.peaks);

  const int k_cap = static_cast<int>(std::min<Eigen::Index>(cfg.k_max, n));
  std::map<int, LdaKmResult> runs;
  std::map<int, int> p;
  int accepted = 0;
  for (int k = 2; k <= k_cap; ++k) {
    LdaKmConfig lc;
    lc.k = k;
    lc.d = std::min(k - 1, cfg.d_max);
    lc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
    lc.max_outer = cfg.max_outer;
    lc.kmeans_restarts = cfg.kmeans_restarts;
    std::vector<LabelAssignment> inits;
    if (k > 2) inits = split_candidates(x, runs.at(k - 1).assignment, lc);
    LdaKmResult r = lda_km_best(x, lc, cfg.lda_km_starts, inits);
    const Projection itr = one_d_projection(x, r.assignment);
    const int pk = peaks_of(row_values(project(x, itr), 0), cfg.histogram, cfg.peaks);
    p[k] = pk;
    runs.emplace(k, std::move(r));
    diag.trace.push_back({k, pk});

    if (k == 2 && diag.pca_peaks == 1 && pk == 1) {
      diag.single_cluster = true;
      accepted = 1;
      break;
    }
    if (k > 2 && pk < k && p[k - 1] < k - 1) {
      // K - 1 already showed fewer peaks than clusters, so it cannot be
      // accepted even when P_K = P_{K-1}.
      diag.stopped_twice_below = true;
      break;
    }
    if (k > 2 && pk == p[k - 1] && pk < k) {
      diag.stopped_by_rule = true;
      accepted = k - 1;
      break;
    }
    if (k == k_cap) diag.cap_hit = true;
  }
  if (accepted == 0) {
    // Largest K whose projection still showed at least K peaks.
    accepted = 2;
    for (const auto& [k, pk] : p)
      if (pk >= k) accepted = std::max(accepted, k);
  }
  diag.accepted_k = accepted;

  SortResult out;
  out.algorithm = "algo1";
  if (accepted == 1) {
    out.assignment.labels.assign(static_cast<std::size_t>(n), 0);
    out.assignment.k = 1;
    out.projection = pca_basis(x, std::min<int>(cfg.d_max, static_cast<int>(x.rows())));
    out.features = project(x, out.projection);
  } else {
    LdaKmResult& r = runs.at(accepted);
    out.assignment = r.assignment;
    out.projection = r.projection;
    out.features = std::move(r.features);
  }
  out.detected_k = out.assignment.distinct_clusters();
  out.algo1 = std::move(diag);
  return out;
}

// --- Algorithm 2 ------------------------------------------------------------

SortResult sort_algo2(const SpikeMatrix& spikes, const Algo2Config& cfg) { return sort_algo2(spikes.data, cfg); }

namespace {

constexpr std::size_t kMinAdSize = 8;

struct WorkItem {
  int id;
  int parent;
  int depth;
  std::vector<Eigen::Index> members;
};

struct SplitOutcome {
  SplitNode node;
  std::vector<Eigen::Index> left, right;
};

SplitOutcome try_split(const Eigen::MatrixXd& x, const WorkItem& w, const Algo2Config& cfg) {
  SplitOutcome o;
  o.node.id = w.id;
  o.node.parent = w.parent;
  o.node.depth = w.depth;
  o.node.size = w.members.size();
  o.node.ad = std::numeric_limits<double>::quiet_NaN();
  o.node.mark = NodeMark::Final;
  if (w.depth >= cfg.max_depth) {
    o.node.depth_capped = true;
    return o;
  }
  if (w.members.size() < kMinAdSize) return o;

  const Eigen::MatrixXd sub = gather(x, w.members);
  LdaKmConfig lc;
  lc.k = 2;
  lc.d = 1;
  lc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(w.id) + 1);
  lc.max_outer = cfg.max_outer;
  lc.kmeans_restarts = cfg.kmeans_restarts;
  const LdaKmResult r = lda_km_best(sub, lc, cfg.lda_km_starts);
  if (r.degenerate) {
    o.node.degenerate = true;
    return o;
  }
  try {
    o.node.ad = ad_statistic(row_values(r.features, 0));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Numerical) throw;
    o.node.degenerate = true;
    return o;
  }
  if (o.node.ad < cfg.ad_threshold) return o;

  o.node.mark = NodeMark::Split;
  for (std::size_t j = 0; j < w.members.size(); ++j)
    (r.assignment.labels[j] == 0 ? o.left : o.right).push_back(w.members[j]);
  return o;
}

}  // namespace

SortResult sort_algo2(const Eigen::MatrixXd& x, const Algo2Config& cfg) {
  cfg.validate();
  const Eigen::Index n = x.cols();
  const int mcs = cfg.resolved_min_cluster_size(static_cast<std::size_t>(n));
  if (n < 2 * static_cast<Eigen::Index>(mcs))
    fail(ErrorKind::InvalidArgument, "Algorithm 2 needs at least 2 * min_cluster_size = " + std::to_string(2 * mcs) +
                                         " spikes, got " + std::to_string(n));

  Algo2Diagnostics diag;
  diag.min_cluster_size = mcs;
  std::vector<int> labels(static_cast<std::size_t>(n), kOutlierLabel);
  int next_label = 0;

  std::vector<WorkItem> level;
  WorkItem root{0, -1, 0, {}};
  root.members.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) root.members[static_cast<std::size_t>(i)] = i;
  level.push_back(std::move(root));

  while (!level.empty()) {
    // Siblings are independent; results are consumed in id order.
    std::vector<std::future<SplitOutcome>> jobs;
    jobs.reserve(level.size());
    for (const auto& w : level)
      jobs.push_back(std::async(std::launch::async, [&x, &w, &cfg] { return try_split(x, w, cfg); }));

    std::vector<WorkItem> next;
    for (std::size_t j = 0; j < level.size(); ++j) {
      SplitOutcome o = jobs[j].get();
      const WorkItem& w = level[j];
      if (o.node.mark == NodeMark::Final) {
        o.node.label = next_label++;
        for (Eigen::Index i : w.members) labels[static_cast<std::size_t>(i)] = o.node.label;
        if (o.node.depth_capped) diag.depth_cap_hit = true;
        diag.nodes.push_back(o.node);
        continue;
      }
      diag.nodes.push_back(o.node);
      const int child_ids[2] = {2 * w.id + 1, 2 * w.id + 2};
      std::vector<Eigen::Index>* parts[2] = {&o.left, &o.right};
      for (int c = 0; c < 2; ++c) {
        std::vector<Eigen::Index>& part = *parts[c];
        if (part.size() >= static_cast<std::size_t>(mcs)) {
          next.push_back({child_ids[c], w.id, w.depth + 1, std::move(part)});
        } else {
          SplitNode leaf;
          leaf.id = child_ids[c];
          leaf.parent = w.id;
          leaf.depth = w.depth + 1;
          leaf.size = part.size();
          leaf.ad = std::numeric_limits<double>::quiet_NaN();
          leaf.mark = NodeMark::Outlier;
          diag.nodes.push_back(leaf);
        }
      }
    }
    level = std::move(next);
  }

  SortResult out;
  out.algorithm = "algo2";
  out.assignment.labels = std::move(labels);
  out.assignment.k = std::max(1, next_label);
  out.projection = one_d_projection(x, out.assignment);
  out.features = project(x, out.projection);

  if (cfg.distance_rule) {
    const int k = out.assignment.k;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0), sq(static_cast<std::size_t>(k), 0.0);
    std::vector<double> cnt(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int l = out.assignment.labels[static_cast<std::size_t>(i)];
      if (l < 0) continue;
      const double v = out.features(0, i);
      sum[static_cast<std::size_t>(l)] += v;
      sq[static_cast<std::size_t>(l)] += v * v;
      cnt[static_cast<std::size_t>(l)] += 1.0;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const int l = out.assignment.labels[static_cast<std::size_t>(i)];
      if (l < 0) continue;
      const auto u = static_cast<std::size_t>(l);
      if (cnt[u] < 2.0) continue;
      const double mean = sum[u] / cnt[u];
      const double var = std::max(0.0, (sq[u] - cnt[u] * mean * mean) / (cnt[u] - 1.0));
      if (std::abs(out.features(0, i) - mean) > cfg.distance_sd * std::sqrt(var)) {
        out.assignment.labels[static_cast<std::size_t>(i)] = kOutlierLabel;
        ++diag.distance_outliers;
      }
    }
  }
  out.detected_k = out.assignment.distinct_clusters();
  out.algo2 = std::move(diag);
  return out;
}

// --- PCA-kmeans baseline ------------------------------------------------------

SortResult sort_pca_kmeans(const SpikeMatrix& spikes, int k, int d, std::uint64_t seed, int restarts) {
  return sort_pca_kmeans(spikes.data, k, d, seed, restarts);
}

SortResult sort_pca_kmeans(const Eigen::MatrixXd& x, int k, int d, std::uint64_t seed, int restarts) {
  require(k >= 1, "k must be >= 1");
  SortResult out;
  out.algorithm = "pca-kmeans";
  out.projection = pca_basis(x, d);
  out.features = project(x, out.projection);
  if (k == 1) {
    out.assignment.labels.assign(static_cast<std::size_t>(x.cols()), 0);
    out.assignment.k = 1;
  } else {
    out.assignment = kmeans_restarts(out.features, k, restarts, seed).assignment;
  }
  out.detected_k = out.assignment.distinct_clusters();
  return out;
}

}  // namespace spikesub
