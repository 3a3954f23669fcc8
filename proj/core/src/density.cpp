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

#include "spikesub/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "spikesub/error.hpp"

namespace spikesub {

long long Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0LL); }

namespace {

// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

std::size_t bin_of(double v, const std::vector<double>& edges) {
  const std::size_t bins = edges.size() - 1;
  if (!(v > edges.front())) return 0;
  if (!(v < edges.back())) return bins - 1;
  auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return static_cast<std::size_t>(std::distance(edges.begin(), it)) - 1;
}

Histogram fill(std::span<const double> values, std::vector<double> edges, double smoothing_bins) {
  Histogram h;
  h.edges = std::move(edges);
  h.counts.assign(h.edges.size() - 1, 0);
  for (double v : values) ++h.counts[bin_of(v, h.edges)];
  h.smoothed = smooth_counts(h.counts, smoothing_bins);
  return h;
}

std::vector<double> linspace(double lo, double hi, int bins) {
  std::vector<double> e(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  e.back() = hi;
  return e;
}

}  // namespace

std::vector<double> smooth_counts(std::span<const long long> counts, double sigma_bins) {
  const auto b = static_cast<std::ptrdiff_t>(counts.size());
  std::vector<double> out(counts.size(), 0.0);
  if (!(sigma_bins > 0.0)) {
    std::transform(counts.begin(), counts.end(), out.begin(), [](long long c) { return static_cast<double>(c); });
    return out;
  }
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_bins));
  std::vector<double> w;
  for (std::ptrdiff_t i = 0; i < b; ++i) {
    if (counts[static_cast<std::size_t>(i)] == 0) continue;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - reach);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(b - 1, i + reach);
    w.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    double norm = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double z = static_cast<double>(j - i) / sigma_bins;
      w[static_cast<std::size_t>(j - lo)] = std::exp(-0.5 * z * z);
      norm += w[static_cast<std::size_t>(j - lo)];
    }
    const double c = static_cast<double>(counts[static_cast<std::size_t>(i)]);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) out[static_cast<std::size_t>(j)] += c * w[static_cast<std::size_t>(j - lo)] / norm;
  }
  return out;
}

Histogram histogram(std::span<const double> values, const HistogramConfig& cfg) {
  if (values.size() < 10) fail(ErrorKind::InvalidArgument, "too few samples");
  require(cfg.min_bins >= 1 && cfg.max_bins >= cfg.min_bins, "invalid histogram bin limits");

  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double lo = s.front();
  const double hi = s.back();
  if (!(hi > lo)) return fill(values, linspace(lo - 0.5, lo + 0.5, cfg.min_bins), cfg.smoothing_bins);

  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(s.size()));
  int bins = cfg.max_bins;
  if (width > 0.0) {
    const double raw = std::ceil((hi - lo) / width);
    bins = raw >= cfg.max_bins ? cfg.max_bins : std::max(cfg.min_bins, static_cast<int>(raw));
  }
  return fill(values, linspace(lo, hi, bins), cfg.smoothing_bins);
}

Histogram histogram_fixed(std::span<const double> values, double lo, double hi, int bins, double smoothing_bins) {
  require(hi > lo && bins >= 1, "invalid fixed histogram range");
  return fill(values, linspace(lo, hi, bins), smoothing_bins);
}

int count_peaks(std::span<const double> y, const PeakConfig& cfg) {
  const auto b = static_cast<std::ptrdiff_t>(y.size());
  if (b == 0) return 0;
  const double top = *std::max_element(y.begin(), y.end());
  if (!(top > 0.0)) return 0;

  int peaks = 0;
  std::ptrdiff_t i = 0;
  while (i < b) {
    // Plateau [i, j).
    std::ptrdiff_t j = i + 1;
    while (j < b && y[static_cast<std::size_t>(j)] == y[static_cast<std::size_t>(i)]) ++j;
    const double h = y[static_cast<std::size_t>(i)];
    const bool left_ok = i == 0 || y[static_cast<std::size_t>(i - 1)] < h;
    const bool right_ok = j == b || y[static_cast<std::size_t>(j)] < h;
    if (left_ok && right_ok && h >= cfg.height_frac * top) {
      // Prominence: on each side walk until a strictly higher sample or the
      // boundary, tracking the minimum; the higher of the two minima is the
      // base. A side with no samples at all does not constrain the base.
      bool have_base = false;
      double base = 0.0;
      if (i > 0) {
        double mn = h;
        for (std::ptrdiff_t l = i - 1; l >= 0 && y[static_cast<std::size_t>(l)] <= h; --l) mn = std::min(mn, y[static_cast<std::size_t>(l)]);
        base = mn;
        have_base = true;
      }
      if (j < b) {
        double mn = h;
        for (std::ptrdiff_t r = j; r < b && y[static_cast<std::size_t>(r)] <= h; ++r) mn = std::min(mn, y[static_cast<std::size_t>(r)]);
        base = have_base ? std::max(base, mn) : mn;
        have_base = true;
      }
      const double prominence = h - (have_base ? base : 0.0);
      if (prominence >= cfg.prominence_frac * top) ++peaks;
    }
    i = j;
  }
  return peaks;
}

int count_peaks(const Histogram& hist, const PeakConfig& cfg) { return count_peaks(hist.smoothed, cfg); }

double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Asymptotic Mills-ratio expansion for the far lower tail.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double ad_statistic(std::span<const double> values) {
  require(values.size() >= 8, "AD statistic needs at least 8 values");
  const auto n = values.size();
  const double nd = static_cast<double>(n);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / nd;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (nd - 1.0));
  if (!(sd > 0.0) || !(sd > 1e-12 * std::max(1.0, std::abs(mean)))) fail(ErrorKind::Numerical, "degenerate sample");

  std::vector<double> z(values.begin(), values.end());
  for (double& v : z) v = (v - mean) / sd;
  std::sort(z.begin(), z.end());

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 2.0 * static_cast<double>(i + 1) - 1.0;
    acc += w * (log_normal_cdf(z[i]) + log_normal_cdf(-z[n - 1 - i]));
  }
  return -nd - acc / nd;
}

}  // namespace spikesub
