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

#include <cstdint>
#include <string>

#include "spikesub/synth.hpp"

namespace spikesub::cli {

// One synthetic recording run through every sorter. Spikes are cut at the
// ground-truth peak times, so the cell measures clustering only.
struct CellOptions {
  TemplateMode mode = TemplateMode::Hard;
  int templates = 3;
  double sigma = 0.1;
  double duration_s = 60.0;
  std::uint64_t seed = 1;
  int pca_d_high = 10;
  int pca_d_low = 2;
};

struct CellResult {
  int n = 0;
  double overlap_fraction = 0.0;
  int algo1_k = 0;
  int algo1_d = 0;  // feature rows actually produced
  double algo1_acc = 0.0;
  double algo1_seconds = 0.0;
  int algo2_k = 0;
  int algo2_d = 0;
  double algo2_acc = 0.0;
  double algo2_seconds = 0.0;
  std::size_t algo2_outliers = 0;
  double pca_high_acc = 0.0;
  double pca_low_acc = 0.0;
};

CellResult run_cell(const CellOptions& opts);

std::string mode_name(TemplateMode mode);
TemplateMode parse_mode(const std::string& name);

}  // namespace spikesub::cli
