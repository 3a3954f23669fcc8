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


#include "spikesub/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "spikesub/error.hpp"

namespace spikesub {

namespace {

constexpr int kExhaustiveLimit = 6;

Eigen::MatrixXd square_pad(const Eigen::MatrixXd& w) {
  const Eigen::Index s = std::max(w.rows(), w.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(s, s);
  out.topLeftCorner(w.rows(), w.cols()) = w;
  return out;
}

// Drops matches that point at padding rows.
std::vector<int> trim(const std::vector<int>& col_to_row, Eigen::Index rows, Eigen::Index cols) {
  std::vector<int> out(static_cast<std::size_t>(cols), -1);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const int r = col_to_row[static_cast<std::size_t>(c)];
    if (r < rows) out[static_cast<std::size_t>(c)] = r;
  }
  return out;
}

}  // namespace

double assignment_weight(const Eigen::MatrixXd& weight, const std::vector<int>& col_to_row) {
  double total = 0.0;
  for (std::size_t c = 0; c < col_to_row.size(); ++c)
    if (col_to_row[c] >= 0) total += weight(col_to_row[c], static_cast<Eigen::Index>(c));
  return total;
}

std::vector<int> assignment_exhaustive(const Eigen::MatrixXd& weight) {
  if (weight.size() == 0) return std::vector<int>(static_cast<std::size_t>(weight.cols()), -1);
  const Eigen::MatrixXd w = square_pad(weight);
  const auto s = static_cast<int>(w.rows());
  require(s <= 10, "exhaustive assignment limited to 10 labels");
  std::vector<int> perm(static_cast<std::size_t>(s));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_w = -std::numeric_limits<double>::infinity();
  do {
    double t = 0.0;
    for (int c = 0; c < s; ++c) t += w(perm[static_cast<std::size_t>(c)], c);
    if (t > best_w) {
      best_w = t;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return trim(best, weight.rows(), weight.cols());
}

std::vector<int> assignment_hungarian(const Eigen::MatrixXd& weight) {
  if (weight.size() == 0) return std::vector<int>(static_cast<std::size_t>(weight.cols()), -1);
  const Eigen::MatrixXd w = square_pad(weight);
  const auto s = static_cast<int>(w.rows());
  const double top = w.maxCoeff();
  // Minimize top - w with the potential-based O(s^3) method; rows are
  // "workers" 1..s, columns "jobs" 1..s, index 0 is a sentinel.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(s) + 1, 0.0), v(static_cast<std::size_t>(s) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(s) + 1, 0), way(static_cast<std::size_t>(s) + 1, 0);
  auto cost = [&](int i, int j) { return top - w(i - 1, j - 1); };
  for (int i = 1; i <= s; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(s) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(s) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= s; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[uj];
        if (cur < minv[uj]) {
          minv[uj] = cur;
          way[uj] = j0;
        }
        if (minv[uj] < delta) {
          delta = minv[uj];
          j1 = j;
        }
      }
      for (int j = 0; j <= s; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) {
          u[static_cast<std::size_t>(p[uj])] += delta;
          v[uj] -= delta;
        } else {
          minv[uj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_to_row(static_cast<std::size_t>(s), -1);
  for (int j = 1; j <= s; ++j) col_to_row[static_cast<std::size_t>(j - 1)] = p[static_cast<std::size_t>(j)] - 1;
  return trim(col_to_row, weight.rows(), weight.cols());
}

EvalReport match_and_score(const LabelAssignment& found, std::span<const int> truth_labels,
                           const std::vector<bool>& overlap_flags) {
  const std::size_t n = found.size();
  if (truth_labels.size() != n || overlap_flags.size() != n)
    fail(ErrorKind::InvalidArgument, "length mismatch: found " + std::to_string(n) + ", truth " +
                                         std::to_string(truth_labels.size()) + ", overlap flags " +
                                         std::to_string(overlap_flags.size()));
  found.validate();
  int k_true = 0;
  for (int t : truth_labels) {
    if (t < -1) fail(ErrorKind::DataFormat, "truth label " + std::to_string(t) + " is invalid");
    k_true = std::max(k_true, t + 1);
  }
  const int k_found = found.k;

  EvalReport r;
  r.confusion = Eigen::MatrixXi::Zero(k_true, k_found);
  r.outliers_per_true.assign(static_cast<std::size_t>(k_true), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (overlap_flags[i]) {
      ++r.n_excluded;
      continue;
    }
    const int t = truth_labels[i];
    if (t < 0) {
      ++r.n_unlabelled;
      continue;
    }
    ++r.n_scored;
    const int f = found.labels[i];
    if (f < 0) {
      ++r.outlier_count;
      ++r.outliers_per_true[static_cast<std::size_t>(t)];
    } else {
      ++r.confusion(t, f);
    }
  }

  const Eigen::MatrixXd w = r.confusion.cast<double>();
  r.matching = std::max(k_true, k_found) <= kExhaustiveLimit ? assignment_exhaustive(w) : assignment_hungarian(w);
  r.n_matched = static_cast<std::size_t>(std::llround(assignment_weight(w, r.matching)));
  r.accuracy_pct = r.n_scored == 0 ? 0.0 : 100.0 * static_cast<double>(r.n_matched) / static_cast<double>(r.n_scored);
  return r;
}

Histogram isi_histogram(std::span<const std::int64_t> spike_times, std::span<const int> labels,
                        double sample_rate_hz, int cluster) {
  require(spike_times.size() == labels.size(), "spike times and labels differ in length");
  require(sample_rate_hz > 0.0, "sample_rate_hz must be > 0");
  std::vector<std::int64_t> t;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == cluster) t.push_back(spike_times[i]);
  if (t.size() < 2)
    fail(ErrorKind::InvalidArgument, "cluster " + std::to_string(cluster) + " has fewer than 2 spikes");
  std::sort(t.begin(), t.end());
  std::vector<double> logs;
  logs.reserve(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double ms = static_cast<double>(t[i] - t[i - 1]) * 1000.0 / sample_rate_hz;
    logs.push_back(ms > 0.0 ? std::log10(ms) : kIsiLogLo);
  }
  return histogram_fixed(logs, kIsiLogLo, kIsiLogHi, kIsiBins, 0.0);
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "accuracy_pct=" << r.accuracy_pct << '\n'
     << "n_matched=" << r.n_matched << '\n'
     << "n_scored=" << r.n_scored << '\n'
     << "n_excluded=" << r.n_excluded << '\n'
     << "n_unlabelled=" << r.n_unlabelled << '\n'
     << "outlier_count=" << r.outlier_count << '\n'
     << "k_true=" << r.confusion.rows() << '\n'
     << "k_found=" << r.confusion.cols() << '\n'
     << "matching=";
  for (std::size_t c = 0; c < r.matching.size(); ++c) os << (c ? "," : "") << c << ":" << r.matching[c];
  os << '\n';
  return os.str();
}

std::string confusion_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "true\\found";
  for (Eigen::Index c = 0; c < r.confusion.cols(); ++c) os << ',' << c;
  os << ",outliers\n";
  for (Eigen::Index t = 0; t < r.confusion.rows(); ++t) {
    os << t;
    for (Eigen::Index c = 0; c < r.confusion.cols(); ++c) os << ',' << r.confusion(t, c);
    os << ',' << r.outliers_per_true[static_cast<std::size_t>(t)] << '\n';
  }
  return os.str();
}

}  // namespace spikesub
