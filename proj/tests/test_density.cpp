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


#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "properties.hpp"
#include "spikesub/density.hpp"
#include "test_util.hpp"

using namespace spikesub;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Inverse normal CDF by bisection; slow but obviously correct.
double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> mixture(int n, double sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = g(rng) + (i % 2 ? sep / 2 : -sep / 2);
  return v;
}

}  // namespace

TEST_SUITE("density") {
  TEST_CASE("one Gaussian gives one peak") {
    const Histogram h = histogram(mixture(1000, 0.0, 1));
    CHECK(count_peaks(h) == 1);
    CHECK(h.total() == 1000);
  }

  TEST_CASE("well separated mixture gives two peaks") {
    CHECK(count_peaks(histogram(mixture(1000, 10.0, 2))) == 2);
  }

  TEST_CASE("identical values fill one bin") {
    const std::vector<double> v(50, 3.25);
    const Histogram h = histogram(v);
    int occupied = 0;
    for (auto c : h.counts) occupied += c > 0;
    CHECK(occupied == 1);
    CHECK(count_peaks(h) == 1);
    CHECK(h.total() == 50);
  }

  TEST_CASE("bin count follows the Freedman-Diaconis width") {
    // Uniform grid: IQR = 0.5 * range, so width = range / cbrt(n).
    std::vector<double> v(1000);
    for (int i = 0; i < 1000; ++i) v[static_cast<std::size_t>(i)] = i / 999.0;
    const Histogram h = histogram(v);
    CHECK(h.bins() == 10);
    CHECK(h.edges.front() == 0.0);
    CHECK(h.edges.back() == 1.0);

    HistogramConfig tight;
    tight.min_bins = 2;
    tight.max_bins = 6;
    CHECK(histogram(v, tight).bins() == 6);
    std::vector<double> small(v.begin(), v.begin() + 20);
    CHECK(histogram(small).bins() == 8);
  }

  TEST_CASE("histogram needs enough samples") {
    CHECK(testing::error_kind([] { histogram(std::vector<double>(9, 1.0)); }) == ErrorKind::InvalidArgument);
  }

  TEST_CASE("fixed-range histogram clamps to the end bins") {
    const std::vector<double> v{-5.0, 0.1, 0.5, 0.9, 7.0};
    const Histogram h = histogram_fixed(v, 0.0, 1.0, 2);
    CHECK(h.counts == std::vector<long long>{2, 3});
    CHECK(h.smoothed == std::vector<double>{2.0, 3.0});
    CHECK(testing::error_kind([&] { histogram_fixed(v, 1.0, 1.0, 2); }) == ErrorKind::InvalidArgument);
  }

  TEST_CASE("smoothing conserves mass") {
    const std::vector<long long> c{0, 5, 0, 0, 7, 1, 0, 0, 0, 3};
    for (double s : {0.0, 0.5, 1.0, 4.0}) {
      const auto y = smooth_counts(c, s);
      CHECK(std::accumulate(y.begin(), y.end(), 0.0) == doctest::Approx(16.0).epsilon(1e-12));
    }
  }

  TEST_CASE("peak rule examples") {
    CHECK(count_peaks(std::vector<double>{0, 1, 3, 1, 0, 2, 5, 2, 0}) == 2);
    CHECK(count_peaks(std::vector<double>{1, 2, 3, 4}) == 1);
    CHECK(count_peaks(std::vector<double>{2, 2, 2, 2}) == 1);
    CHECK(count_peaks(std::vector<double>{0, 0, 0}) == 0);
    CHECK(count_peaks(std::vector<double>{}) == 0);
    CHECK(count_peaks(std::vector<double>{4, 1, 1, 4}) == 2);
  }

  TEST_CASE("peak floors suppress small wiggles") {
    // A 2% bump on a large peak is below both floors.
    CHECK(count_peaks(std::vector<double>{0, 50, 100, 50, 10, 12, 10, 0}) == 1);
    CHECK(count_peaks(std::vector<double>{0, 50, 100, 50, 10, 30, 10, 0}) == 2);
    PeakConfig loose;
    loose.prominence_frac = 0.0;
    loose.height_frac = 0.0;
    CHECK(count_peaks(std::vector<double>{0, 50, 100, 50, 10, 12, 10, 0}, loose) == 2);
  }

  TEST_CASE("AD on exact normal quantiles is small") {
    std::vector<double> q(200);
    for (int i = 1; i <= 200; ++i) q[static_cast<std::size_t>(i - 1)] = normal_quantile((i - 0.5) / 200.0);
    const double a = ad_statistic(q);
    CHECK(a <= 0.2);
    CHECK(a == doctest::Approx(testing::reference_ad(q)).epsilon(1e-9));
  }

  TEST_CASE("AD on a far bimodal sample is large") {
    const auto v = mixture(1000, 10.0, 3);
    const double a = ad_statistic(v);
    CHECK(a >= 50.0);
    CHECK(a == doctest::Approx(testing::reference_ad(v)).epsilon(1e-9));
  }

  TEST_CASE("AD grows with mixture separation") {
    double prev = -1.0;
    for (double sep : {0.0, 2.0, 4.0, 8.0}) {
      const double a = ad_statistic(mixture(1000, sep, 4));
      CHECK(a >= prev);
      prev = a;
    }
  }

  TEST_CASE("AD affine invariance") {
    const auto v = mixture(300, 3.0, 5);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = -2.5 * v[i] + 17.0;
    CHECK(std::abs(ad_statistic(v) - ad_statistic(w)) <= 1e-9);
  }

  TEST_CASE("AD input checks") {
    CHECK(testing::error_kind([] { ad_statistic(std::vector<double>(7, 1.0)); }) == ErrorKind::InvalidArgument);
    CHECK(testing::error_kind([] { ad_statistic(std::vector<double>(20, 1.0)); }) == ErrorKind::Numerical);
  }

  TEST_CASE("log normal CDF is accurate into the far tail") {
    for (double z : {-3.0, -10.0, -29.0}) CHECK(log_normal_cdf(z) == doctest::Approx(std::log(normal_cdf(z))).epsilon(1e-12));
    // Across the switch to the asymptotic series.
    CHECK(log_normal_cdf(-30.0001) == doctest::Approx(log_normal_cdf(-29.9999)).epsilon(1e-4));
    CHECK(std::isfinite(log_normal_cdf(-200.0)));
    CHECK(log_normal_cdf(-200.0) < log_normal_cdf(-100.0));
    CHECK(log_normal_cdf(40.0) == 0.0);
  }
}
