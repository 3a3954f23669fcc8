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
#include <vector>

#include "spikesub/spike_io.hpp"

namespace spikesub {

enum class TemplateMode { Hard, Easy };

// Every template has its trough (value -1) at this sample.
inline constexpr int kTemplatePeakIndex = 20;

struct SynthConfig {
  std::vector<Eigen::VectorXd> templates;
  double firing_rate_hz = 20.0;  // per template
  double duration_s = 60.0;
  double noise_sigma = 0.1;      // relative to unit peak amplitude
  double sample_rate_hz = 24000.0;
  double refractory_ms = 2.0;
  std::uint64_t seed = 0;
  int overlap_window = 64;       // |dt| <= overlap_window samples counts as overlapping
  int peak_index = kTemplatePeakIndex;

  // Background noise: Gaussian, shaped to a 1/f^noise_exponent power
  // spectrum, then band-passed by a zero-phase Butterworth magnitude response.
  double noise_exponent = 1.5;
  double band_low_hz = 300.0;
  double band_high_hz = 5000.0;
  int band_order = 2;

  void validate() const;
};

struct SynthDataset {
  RawSignal signal;
  std::vector<std::int64_t> truth_times;  // peak sample index, ascending
  std::vector<int> truth_labels;          // template index
  std::vector<bool> overlap_flags;

  GroundTruth truth() const;
};

// `count` biphasic templates of length m built from two gamma-shaped lobes,
//   f(t) = -g(t; k1, tau1) + a2 * g(t - s2; k2, tau2),
//   g(t; k, tau) = (t / tau)^k exp(-t / tau) / (k^k exp(-k)),
// sampled at 24 kHz so the continuous trough lands exactly on
// kTemplatePeakIndex and scaled to value -1 there. Hard-mode templates are
// pairwise correlated in [0.7, 0.95]; easy-mode ones at most 0.5.
std::vector<Eigen::VectorXd> default_templates(int m, int count, TemplateMode mode = TemplateMode::Hard);

// Pearson correlation of two equal-length waveforms.
double template_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Shaped background noise with empirical SD exactly `sigma` (zero when sigma
// is zero).
std::vector<double> shaped_noise(std::size_t n, const SynthConfig& cfg, std::uint64_t seed);

SynthDataset generate(const SynthConfig& cfg);

}  // namespace spikesub
