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
#include <span>
#include <string>
#include <vector>

#include "spikesub/density.hpp"
#include "spikesub/labels.hpp"

namespace spikesub {

struct EvalReport {
  double accuracy_pct = 0.0;
  // K_true x K_found counts over scored spikes; found outliers are not a
  // column and are tallied in outlier_count instead.
  Eigen::MatrixXi confusion;
  std::vector<int> matching;    // found label -> true label, -1 if unmatched
  std::size_t n_matched = 0;
  std::size_t n_scored = 0;
  std::size_t n_excluded = 0;   // overlap-flagged spikes
  std::size_t n_unlabelled = 0; // truth label -1, not scored
  std::size_t outlier_count = 0;
  std::vector<std::size_t> outliers_per_true;  // found outliers by true label
};

// Labels are scored in order; truth labels of -1 carry no ground truth and are
// skipped. Found outliers always count as errors.
EvalReport match_and_score(const LabelAssignment& found, std::span<const int> truth_labels,
                           const std::vector<bool>& overlap_flags);

// Injective column -> row map maximizing the summed weight of a rows x cols
// matrix. Entries are -1 for columns left unmatched when cols > rows.
std::vector<int> assignment_exhaustive(const Eigen::MatrixXd& weight);
std::vector<int> assignment_hungarian(const Eigen::MatrixXd& weight);
double assignment_weight(const Eigen::MatrixXd& weight, const std::vector<int>& col_to_row);

// Histogram of log10 inter-spike intervals (ms) of one cluster: 45 bins over
// [-0.5, 4], values outside clamped to the end bins.
Histogram isi_histogram(std::span<const std::int64_t> spike_times, std::span<const int> labels,
                        double sample_rate_hz, int cluster);

inline constexpr double kIsiLogLo = -0.5;
inline constexpr double kIsiLogHi = 4.0;
inline constexpr int kIsiBins = 45;

// key=value lines.
std::string format_report(const EvalReport& r);
// Header "true\found,0,1,...,outliers" then one row per true label.
std::string confusion_csv(const EvalReport& r);

}  // namespace spikesub
