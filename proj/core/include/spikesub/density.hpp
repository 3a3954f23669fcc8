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

#include <span>
#include <vector>

namespace spikesub {

// 1-D histogram with a smoothed copy of the counts used for peak finding.
struct Histogram {
  std::vector<double> edges;  // B + 1, strictly ascending
  std::vector<long long> counts;
  std::vector<double> smoothed;

  int bins() const { return static_cast<int>(counts.size()); }
  long long total() const;
};

struct HistogramConfig {
  int min_bins = 8;
  int max_bins = 128;
  double smoothing_bins = 1.0;  // Gaussian kernel SD in bins; 0 disables
};

struct PeakConfig {
  double prominence_frac = 0.05;
  double height_frac = 0.05;
};

// Freedman-Diaconis binning clamped to [min_bins, max_bins], then
// mass-preserving Gaussian smoothing. Needs at least 10 values.
Histogram histogram(std::span<const double> values, const HistogramConfig& cfg = {});

// Histogram over fixed edges (values outside are clamped into the end bins),
// smoothed per cfg.
Histogram histogram_fixed(std::span<const double> values, double lo, double hi, int bins,
                          double smoothing_bins = 0.0);

// Mass-preserving Gaussian smoothing: each bin's count is spread over the
// in-range bins with weights renormalized to one.
std::vector<double> smooth_counts(std::span<const long long> counts, double sigma_bins);

// Local maxima of hist.smoothed (plateaus count once, boundary bins may be
// peaks) whose height and prominence both reach the configured fraction of
// the global maximum.
int count_peaks(const Histogram& hist, const PeakConfig& cfg = {});
int count_peaks(std::span<const double> smoothed, const PeakConfig& cfg = {});

// Anderson-Darling A^2 for normality with mean and variance estimated from the
// sample (sample SD with n - 1), no small-sample correction.
double ad_statistic(std::span<const double> values);

// log of the standard normal CDF, accurate far into the lower tail.
double log_normal_cdf(double z);

}  // namespace spikesub
