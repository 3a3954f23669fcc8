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

#include "spikesub/labels.hpp"

#include <string>
#include <unordered_map>

#include "spikesub/error.hpp"

namespace spikesub {

void LabelAssignment::validate() const {
  if (k < 1) fail(ErrorKind::DataFormat, "label assignment has k < 1");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l != kOutlierLabel && (l < 0 || l >= k)) {
      fail(ErrorKind::DataFormat, "label " + std::to_string(l) + " at spike " + std::to_string(i) +
                                      " outside [0, " + std::to_string(k) + ")");
    }
  }
}

std::vector<std::size_t> LabelAssignment::counts() const {
  std::vector<std::size_t> c(static_cast<std::size_t>(k), 0);
  for (int l : labels)
    if (l >= 0 && l < k) ++c[static_cast<std::size_t>(l)];
  return c;
}

std::size_t LabelAssignment::outlier_count() const {
  std::size_t c = 0;
  for (int l : labels)
    if (l == kOutlierLabel) ++c;
  return c;
}

int LabelAssignment::distinct_clusters() const {
  int d = 0;
  for (std::size_t c : counts())
    if (c > 0) ++d;
  return d;
}

LabelAssignment canonicalize(const LabelAssignment& a) {
  std::unordered_map<int, int> remap;
  LabelAssignment out;
  out.labels.reserve(a.labels.size());
  for (int l : a.labels) {
    if (l == kOutlierLabel) {
      out.labels.push_back(kOutlierLabel);
      continue;
    }
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.labels.push_back(it->second);
  }
  out.k = remap.empty() ? 1 : static_cast<int>(remap.size());
  return out;
}

bool same_partition(const LabelAssignment& a, const LabelAssignment& b) {
  if (a.labels.size() != b.labels.size()) return false;
  return canonicalize(a).labels == canonicalize(b).labels;
}

}  // namespace spikesub
