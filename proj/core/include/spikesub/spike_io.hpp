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
#include <filesystem>
#include <span>
#include <vector>

#include "spikesub/labels.hpp"

namespace spikesub {

// Continuous single-channel recording, before detection.
struct RawSignal {
  std::vector<double> samples;
  double sample_rate_hz = 24000.0;
};

// m x n waveform matrix; column i is spike i, aligned so every waveform's
// extremum sits at peak_index.
struct SpikeMatrix {
  Eigen::MatrixXd data;
  int peak_index = 0;
  double sample_rate_hz = 24000.0;

  int m() const { return static_cast<int>(data.rows()); }
  int n() const { return static_cast<int>(data.cols()); }
};

enum class Polarity { Negative, Positive, Absolute };

struct DetectionConfig {
  double threshold_multiplier = 3.0;
  Polarity polarity = Polarity::Negative;
  int lockout_samples = 0;  // 0 means "use post_peak"
  int pre_peak = 20;
  int post_peak = 43;

  int window() const { return pre_peak + post_peak + 1; }
  int effective_lockout() const { return lockout_samples > 0 ? lockout_samples : post_peak; }
  void validate() const;
};

double compute_rms(std::span<const double> samples);
inline double compute_rms(const RawSignal& s) { return compute_rms(s.samples); }

// Peak sample indices of threshold crossings at threshold_multiplier * RMS.
// Within a suprathreshold run the sample of greatest polarity-adjusted
// magnitude wins; later crossings are suppressed for the lockout period and
// events without a full window are dropped.
std::vector<std::int64_t> detect_spikes(const RawSignal& signal, const DetectionConfig& cfg);

// Moves each peak to the polarity-adjusted extremum within +/- radius
// samples, staying inside the admissible window range.
std::vector<std::int64_t> align_peaks(const RawSignal& signal, std::span<const std::int64_t> peaks,
                                      int radius, const DetectionConfig& cfg);

SpikeMatrix extract_aligned(const RawSignal& signal, std::span<const std::int64_t> peaks,
                            const DetectionConfig& cfg);

// Ground truth that accompanies a synthetic recording.
struct GroundTruth {
  std::vector<std::int64_t> peak_index;
  std::vector<int> label;
  std::vector<bool> overlap;

  std::size_t size() const { return peak_index.size(); }
};

// --- file formats ---------------------------------------------------------
//
// RawSignal:       <name>.f32 (little-endian float32) + <name>.json sidecar
//                  holding {"sample_rate_hz": ...}.
// SpikeMatrix:     "SPKM" | u32 m | u32 n | u32 peak_index | f64 sample_rate,
//                  then column-major little-endian f64 data.
// LabelAssignment: CSV "spike_index,label" with an optional leading
//                  "# k=<K>" line; outliers are -1.
// GroundTruth:     CSV "peak_index,label,overlap".
//
// All writers go through a temporary file and a rename.

void write_raw_signal(const std::filesystem::path& f32_path, const RawSignal& s);
RawSignal read_raw_signal(const std::filesystem::path& f32_path);
std::filesystem::path sidecar_path(const std::filesystem::path& f32_path);

void write_spike_matrix(const std::filesystem::path& path, const SpikeMatrix& x);
SpikeMatrix read_spike_matrix(const std::filesystem::path& path);
void write_spike_matrix_csv(const std::filesystem::path& path, const SpikeMatrix& x);

void write_labels_csv(const std::filesystem::path& path, const LabelAssignment& labels);
LabelAssignment read_labels_csv(const std::filesystem::path& path);

void write_truth_csv(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_truth_csv(const std::filesystem::path& path);

// Writes `contents` to `path` via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace spikesub
