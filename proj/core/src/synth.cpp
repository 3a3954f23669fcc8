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


#include "spikesub/synth.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <string>

#include "spikesub/clustering.hpp"
#include "spikesub/error.hpp"

namespace spikesub {

namespace {

struct LobePair {
  double k1, tau1, a2, s2, k2, tau2;
};

// Correlations of the first three hard shapes: 0.87, 0.79, 0.82.
constexpr std::array<LobePair, 5> kHardShapes{{
    {3, 0.096, 0.45, 0.27, 2, 0.154},
    {2, 0.044, 0.24, 0.315, 3, 0.156},
    {3, 0.045, 0.44, 0.054, 3, 0.082},
    {3, 0.062, 0.64, 0.069, 3, 0.155},
    {3, 0.064, 0.422, 0.128, 3, 0.067},
}};

constexpr std::array<LobePair, 5> kEasyShapes{{
    {2, 0.353, 0.861, 0.856, 1, 0.278},
    {3, 0.135, 0.772, 0.032, 1, 0.214},
    {3, 0.024, 0.823, 0.227, 2, 0.07},
    {1, 0.026, 0.707, 0.856, 5, 0.064},
    {2, 0.184, 0.897, 0.18, 1, 0.096},
}};

constexpr double kTemplateRateHz = 24000.0;

double gamma_lobe(double t_ms, double k, double tau) {
  if (t_ms <= 0.0) return 0.0;
  const double x = t_ms / tau;
  return std::exp(k * std::log(x) - x - (k * std::log(k) - k));
}

double waveform(double t_ms, const LobePair& p) {
  return -gamma_lobe(t_ms, p.k1, p.tau1) + p.a2 * gamma_lobe(t_ms - p.s2, p.k2, p.tau2);
}

// Location of the global minimum of the waveform: coarse grid, then golden
// section on the bracketing interval.
double trough_time(const LobePair& p) {
  constexpr double step = 2e-3;
  double best_t = 0.0, best_v = 0.0;
  for (int i = 0; i <= 1500; ++i) {
    const double t = i * step;
    const double v = waveform(t, p);
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  double lo = std::max(0.0, best_t - step), hi = best_t + step;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
  double fa = waveform(a, p), fb = waveform(b, p);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - r * (hi - lo);
      fa = waveform(a, p);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + r * (hi - lo);
      fb = waveform(b, p);
    }
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd render(const LobePair& p, int m) {
  const double ts = trough_time(p);
  const double dt_ms = 1000.0 / kTemplateRateHz;
  Eigen::VectorXd out(m);
  for (int i = 0; i < m; ++i) out[i] = waveform(ts + (i - kTemplatePeakIndex) * dt_ms, p);
  out /= -out[kTemplatePeakIndex];
  out[kTemplatePeakIndex] = -1.0;
  return out;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void SynthConfig::validate() const {
  require(!templates.empty(), "at least one template is required");
  const Eigen::Index m = templates.front().size();
  require(m > 0, "templates must be non-empty");
  for (const auto& t : templates) require(t.size() == m, "templates must share one length");
  require(peak_index >= 0 && peak_index < m, "peak_index outside template");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(std::isfinite(refractory_ms) && refractory_ms >= 0.0, "refractory_ms must be >= 0");
  require(std::isfinite(firing_rate_hz) && firing_rate_hz > 0.0, "firing_rate_hz must be > 0");
  require(std::isfinite(duration_s) && duration_s > 0.0, "duration_s must be > 0");
  require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0, "sample_rate_hz must be > 0");
  require(1000.0 / firing_rate_hz > refractory_ms, "firing rate incompatible with refractory period");
  require(overlap_window >= 0, "overlap_window must be >= 0");
  require(std::isfinite(noise_exponent), "noise_exponent must be finite");
  require(band_order >= 1, "band_order must be >= 1");
  require(band_low_hz > 0.0 && band_low_hz < band_high_hz, "band edges must satisfy 0 < low < high");
}

GroundTruth SynthDataset::truth() const {
  GroundTruth g;
  g.peak_index = truth_times;
  g.label = truth_labels;
  g.overlap = overlap_flags;
  return g;
}

std::vector<Eigen::VectorXd> default_templates(int m, int count, TemplateMode mode) {
  require(count >= 1 && count <= 5, "template count must be in [1, 5]");
  require(m >= 32, "template length must be >= 32");
  const auto& shapes = mode == TemplateMode::Hard ? kHardShapes : kEasyShapes;
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < count; ++i) out.push_back(render(shapes[static_cast<std::size_t>(i)], m));
  return out;
}

double template_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require(a.size() == b.size() && a.size() >= 2, "correlation needs equal lengths >= 2");
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double den = ca.norm() * cb.norm();
  if (den == 0.0) fail(ErrorKind::Numerical, "correlation of a constant waveform");
  return ca.dot(cb) / den;
}

std::vector<double> shaped_noise(std::size_t n, const SynthConfig& cfg, std::uint64_t seed) {
  std::vector<double> out(n, 0.0);
  if (n == 0 || cfg.noise_sigma == 0.0) return out;

  // White noise over a power-of-two length, filtered circularly, truncated.
  const std::size_t len = next_pow2(std::max<std::size_t>(n, 2));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(len);
  for (auto& v : white) v = normal(rng);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, white);
  const double fs = cfg.sample_rate_hz;
  const double order2 = 2.0 * cfg.band_order;
  for (std::size_t j = 0; j < len; ++j) {
    const std::size_t jj = j <= len / 2 ? j : len - j;
    const double f = static_cast<double>(jj) * fs / static_cast<double>(len);
    double gain = 0.0;
    if (f > 0.0) {
      const double hp = 1.0 / std::sqrt(1.0 + std::pow(cfg.band_low_hz / f, order2));
      const double lp = 1.0 / std::sqrt(1.0 + std::pow(f / cfg.band_high_hz, order2));
      gain = std::pow(f, -0.5 * cfg.noise_exponent) * hp * lp;
    }
    spec[j] *= gain;
  }
  std::vector<double> shaped;
  fft.inv(shaped, spec);

  std::copy_n(shaped.begin(), n, out.begin());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (auto& v : out) {
    v -= mean;
    ss += v * v;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) fail(ErrorKind::Numerical, "noise shaping produced a constant signal");
  for (auto& v : out) v *= cfg.noise_sigma / sd;
  return out;
}

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const double fs = cfg.sample_rate_hz;
  const auto n = static_cast<std::int64_t>(std::floor(cfg.duration_s * fs));
  const auto m = static_cast<std::int64_t>(cfg.templates.front().size());
  const std::int64_t pk = cfg.peak_index;

  SynthDataset ds;
  ds.signal.sample_rate_hz = fs;
  ds.signal.samples = shaped_noise(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)), cfg, cfg.seed);

  // Renewal trains: ISI = refractory + exponential, with the exponential mean
  // chosen so the mean rate equals firing_rate_hz.
  const auto ref_samples = static_cast<std::int64_t>(std::ceil(cfg.refractory_ms * fs / 1000.0));
  const double exp_mean = std::max(fs / cfg.firing_rate_hz - static_cast<double>(ref_samples), 1e-9);
  struct Event {
    std::int64_t t;
    int label;
  };
  std::vector<Event> events;
  for (std::size_t k = 0; k < cfg.templates.size(); ++k) {
    std::mt19937_64 rng(derive_seed(cfg.seed, k + 1));
    std::exponential_distribution<double> expo(1.0 / exp_mean);
    std::int64_t t = 0;
    while (true) {
      const auto gap = ref_samples + static_cast<std::int64_t>(std::llround(expo(rng)));
      t += std::max<std::int64_t>(gap, 1);
      if (t - pk + m > n) break;
      if (t - pk < 0) continue;
      events.push_back({t, static_cast<int>(k)});
    }
  }
  if (events.empty()) fail(ErrorKind::InvalidArgument, "duration too short for any spike");

  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.t != b.t ? a.t < b.t : a.label < b.label;
  });
  for (const auto& e : events) {
    const auto& tp = cfg.templates[static_cast<std::size_t>(e.label)];
    for (std::int64_t i = 0; i < m; ++i)
      ds.signal.samples[static_cast<std::size_t>(e.t - pk + i)] += tp[static_cast<Eigen::Index>(i)];
    ds.truth_times.push_back(e.t);
    ds.truth_labels.push_back(e.label);
  }
  const std::size_t ne = events.size();
  ds.overlap_flags.assign(ne, false);
  for (std::size_t i = 0; i + 1 < ne; ++i) {
    if (events[i + 1].t - events[i].t <= cfg.overlap_window) {
      ds.overlap_flags[i] = true;
      ds.overlap_flags[i + 1] = true;
    }
  }
  return ds;
}

}  // namespace spikesub
