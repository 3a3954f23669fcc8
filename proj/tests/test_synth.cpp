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

#include <algorithm>
#include <cmath>
#include <map>

#include "spikesub/spike_io.hpp"
#include "spikesub/synth.hpp"
#include "test_util.hpp"

using namespace spikesub;

namespace {

SynthConfig config(int count, double sigma, double duration, std::uint64_t seed) {
  SynthConfig c;
  c.templates = default_templates(64, count);
  c.noise_sigma = sigma;
  c.duration_s = duration;
  c.seed = seed;
  return c;
}

double sd_of(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// Mean power of a real signal in [lo, hi) Hz, by direct DFT on a coarse grid.
double band_power(const std::vector<double>& v, double fs, double lo, double hi) {
  const std::size_t n = 4096;
  double total = 0.0;
  int bins = 0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double f = fs * static_cast<double>(k) / static_cast<double>(n);
    if (f < lo || f >= hi) continue;
    double re = 0.0, im = 0.0;
    for (std::size_t seg = 0; seg + n <= v.size(); seg += n)
      for (std::size_t j = 0; j < n; ++j) {
        const double a = 2.0 * M_PI * static_cast<double>(k * j) / static_cast<double>(n);
        re += v[seg + j] * std::cos(a);
        im -= v[seg + j] * std::sin(a);
      }
    total += re * re + im * im;
    ++bins;
  }
  return total / bins;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("templates have one trough of -1 at the peak index") {
    for (TemplateMode mode : {TemplateMode::Hard, TemplateMode::Easy}) {
      const auto t = default_templates(64, 5, mode);
      REQUIRE(t.size() == 5);
      for (const auto& w : t) {
        CHECK(w.size() == 64);
        Eigen::Index at = 0;
        CHECK(w.minCoeff(&at) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(at == kTemplatePeakIndex);
        CHECK(w[kTemplatePeakIndex] == doctest::Approx(-1.0).epsilon(1e-12));
      }
    }
    const auto one = default_templates(64, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0][kTemplatePeakIndex] == doctest::Approx(-1.0));
  }

  TEST_CASE("hard templates are similar, easy ones are not") {
    const auto hard = default_templates(64, 5, TemplateMode::Hard);
    const auto easy = default_templates(64, 5, TemplateMode::Easy);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) {
        const double ch = template_correlation(hard[i], hard[j]);
        INFO("pair " << i << "," << j << " hard " << ch);
        CHECK(ch >= 0.7);
        CHECK(ch <= 0.95);
        CHECK(template_correlation(easy[i], easy[j]) <= 0.5);
      }
  }

  TEST_CASE("template arguments are checked") {
    CHECK(testing::error_kind([] { default_templates(64, 0); }) == ErrorKind::InvalidArgument);
    CHECK(testing::error_kind([] { default_templates(64, 6); }) == ErrorKind::InvalidArgument);
    CHECK(testing::error_kind([] { default_templates(16, 2); }) == ErrorKind::InvalidArgument);
    const Eigen::VectorXd flat = Eigen::VectorXd::Ones(8);
    CHECK(testing::error_kind([&] { template_correlation(flat, flat); }) == ErrorKind::Numerical);
  }

  TEST_CASE("config validation") {
    SynthConfig c = config(2, 0.1, 1.0, 1);
    CHECK_NOTHROW(c.validate());
    auto bad = [&](auto mutate) {
      SynthConfig b = c;
      mutate(b);
      return testing::error_kind([&] { generate(b); });
    };
    CHECK(bad([](SynthConfig& b) { b.templates.clear(); }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.templates[1] = Eigen::VectorXd::Zero(40); }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.noise_sigma = -0.1; }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.noise_sigma = std::nan(""); }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.firing_rate_hz = 0.0; }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.firing_rate_hz = 600.0; }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.duration_s = 0.0; }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.peak_index = 64; }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.band_low_hz = 6000.0; }) == ErrorKind::InvalidArgument);
    CHECK(bad([](SynthConfig& b) { b.duration_s = 0.001; }) == ErrorKind::InvalidArgument);
  }

  TEST_CASE("generation is deterministic in the seed") {
    const SynthDataset a = generate(config(3, 0.1, 5.0, 11));
    const SynthDataset b = generate(config(3, 0.1, 5.0, 11));
    const SynthDataset c = generate(config(3, 0.1, 5.0, 12));
    CHECK(a.signal.samples == b.signal.samples);
    CHECK(a.truth_times == b.truth_times);
    CHECK(a.truth_labels == b.truth_labels);
    CHECK(a.signal.samples != c.signal.samples);
    CHECK(a.truth_times != c.truth_times);
  }

  TEST_CASE("ground truth is sorted, in range and consistent") {
    const SynthConfig c = config(3, 0.1, 20.0, 5);
    const SynthDataset ds = generate(c);
    const auto n = static_cast<std::int64_t>(ds.signal.samples.size());
    CHECK(n == static_cast<std::int64_t>(c.duration_s * c.sample_rate_hz));
    REQUIRE(ds.truth_times.size() == ds.truth_labels.size());
    REQUIRE(ds.truth_times.size() == ds.overlap_flags.size());
    CHECK(std::is_sorted(ds.truth_times.begin(), ds.truth_times.end()));
    for (std::size_t i = 0; i < ds.truth_times.size(); ++i) {
      CHECK(ds.truth_times[i] >= c.peak_index);
      CHECK(ds.truth_times[i] - c.peak_index + 64 <= n);
      CHECK((ds.truth_labels[i] >= 0 && ds.truth_labels[i] < 3));
    }
    // Rates near 20 Hz per unit.
    std::map<int, int> per;
    for (int l : ds.truth_labels) ++per[l];
    for (const auto& [l, cnt] : per) CHECK(std::abs(cnt / c.duration_s - 20.0) < 3.0);
    const GroundTruth g = ds.truth();
    CHECK(g.peak_index == ds.truth_times);
    CHECK(g.label == ds.truth_labels);
    CHECK(g.overlap == ds.overlap_flags);
  }

  TEST_CASE("refractory period is respected within each unit") {
    const SynthConfig c = config(3, 0.0, 60.0, 6);
    const SynthDataset ds = generate(c);
    const auto ref = static_cast<std::int64_t>(std::ceil(c.refractory_ms * c.sample_rate_hz / 1000.0));
    std::map<int, std::int64_t> last;
    std::int64_t min_gap = 1 << 30;
    for (std::size_t i = 0; i < ds.truth_times.size(); ++i) {
      const int l = ds.truth_labels[i];
      if (last.count(l)) min_gap = std::min(min_gap, ds.truth_times[i] - last[l]);
      last[l] = ds.truth_times[i];
    }
    CHECK(min_gap >= ref);
  }

  TEST_CASE("overlap flags mark every event with a neighbour in the window") {
    const SynthConfig c = config(3, 0.0, 30.0, 7);
    const SynthDataset ds = generate(c);
    const auto& t = ds.truth_times;
    // Brute force over all pairs for a prefix, then the adjacent-pair shortcut.
    for (std::size_t i = 0; i < std::min<std::size_t>(t.size(), 200); ++i) {
      bool near = false;
      for (std::size_t j = 0; j < t.size() && !near; ++j)
        if (j != i && std::llabs(t[j] - t[i]) <= c.overlap_window) near = true;
      CHECK(ds.overlap_flags[i] == near);
    }
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
      const bool near = t[i] - t[i - 1] <= c.overlap_window || t[i + 1] - t[i] <= c.overlap_window;
      CHECK(ds.overlap_flags[i] == near);
    }
  }

  TEST_CASE("overlap fraction matches the renewal coincidence rate") {
    // Each unit fires with ISI = r + Exp(mu). For a stationary train the
    // chance of no event in a window of length L >= r is lambda * mu *
    // exp(-(L - r) / mu); a unit's own neighbours are clear when both
    // adjacent ISIs exceed w.
    for (int units : {2, 3}) {
      const SynthConfig c = config(units, 0.0, 300.0, 8);
      const SynthDataset ds = generate(c);
      const double fs = c.sample_rate_hz;
      const double r = std::ceil(c.refractory_ms * fs / 1000.0);
      const double mu = fs / c.firing_rate_hz - r;
      const double lambda = 1.0 / (r + mu);
      const double w = c.overlap_window;
      const double self_clear = std::exp(-(w + 0.5 - r) / mu);
      const double other_clear = lambda * mu * std::exp(-((2.0 * w + 1.0) - r) / mu);
      const double expected = 1.0 - self_clear * self_clear * std::pow(other_clear, units - 1);
      const auto n = static_cast<double>(ds.overlap_flags.size());
      const double observed =
          static_cast<double>(std::count(ds.overlap_flags.begin(), ds.overlap_flags.end(), true)) / n;
      const double se = std::sqrt(expected * (1.0 - expected) / n);
      INFO(units << " units: observed " << observed << ", expected " << expected << ", se " << se);
      CHECK(std::abs(observed - expected) <= 3.0 * se);
    }
  }

  TEST_CASE("one sparse noise-free unit is detected completely") {
    SynthConfig c = config(1, 0.0, 10.0, 13);
    c.firing_rate_hz = 5.0;
    const SynthDataset ds = generate(c);
    const std::vector<std::int64_t> found = detect_spikes(ds.signal, DetectionConfig{});
    CHECK(found == ds.truth_times);
  }

  TEST_CASE("shaped noise has the requested SD and a falling spectrum") {
    SynthConfig c = config(1, 0.2, 1.0, 9);
    const std::vector<double> v = shaped_noise(48000, c, 9);
    CHECK(sd_of(v) == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(shaped_noise(48000, c, 9) == v);
    CHECK(shaped_noise(48000, c, 10) != v);
    // Inside the pass band power falls with frequency.
    const double low = band_power(v, c.sample_rate_hz, 600.0, 1200.0);
    const double high = band_power(v, c.sample_rate_hz, 2400.0, 4800.0);
    CHECK(low > 2.0 * high);
    // Little power survives far below or above the band.
    CHECK(band_power(v, c.sample_rate_hz, 8000.0, 11000.0) < 0.1 * low);
    c.noise_sigma = 0.0;
    const std::vector<double> z = shaped_noise(1000, c, 9);
    CHECK(std::all_of(z.begin(), z.end(), [](double x) { return x == 0.0; }));
  }

  TEST_CASE("recording noise SD is close to sigma") {
    const SynthConfig c = config(3, 0.1, 30.0, 10);
    const SynthDataset ds = generate(c);
    // Spike-free gaps between events carry only background noise.
    std::vector<double> gaps;
    const auto& t = ds.truth_times;
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
      for (std::int64_t s = t[i] + 44 + 4; s < t[i + 1] - 20 - 4; ++s) gaps.push_back(ds.signal.samples[static_cast<std::size_t>(s)]);
    REQUIRE(gaps.size() > 100000);
    CHECK(std::abs(sd_of(gaps) - 0.1) <= 0.005);
  }

  TEST_CASE("noise-free round trip recovers every isolated spike exactly") {
    const SynthConfig c = config(3, 0.0, 30.0, 12);
    const SynthDataset ds = generate(c);
    DetectionConfig dc;
    const std::vector<std::int64_t> found = detect_spikes(ds.signal, dc);
    std::size_t isolated = 0, hit = 0;
    for (std::size_t i = 0; i < ds.truth_times.size(); ++i) {
      if (ds.overlap_flags[i]) continue;
      ++isolated;
      if (std::binary_search(found.begin(), found.end(), ds.truth_times[i])) ++hit;
    }
    REQUIRE(isolated > 1000);
    CHECK(hit == isolated);

    std::vector<std::int64_t> peaks;
    std::vector<int> labels;
    for (std::size_t i = 0; i < ds.truth_times.size(); ++i)
      if (!ds.overlap_flags[i]) {
        peaks.push_back(ds.truth_times[i]);
        labels.push_back(ds.truth_labels[i]);
      }
    const SpikeMatrix x = extract_aligned(ds.signal, peaks, dc);
    REQUIRE(x.n() == static_cast<int>(peaks.size()));
    double worst = 0.0;
    for (int j = 0; j < x.n(); ++j)
      worst = std::max(worst, (x.data.col(j) - c.templates[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])]).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-12);
  }
}
