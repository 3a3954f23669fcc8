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

#include "spikesub/labels.hpp"
#include "test_util.hpp"

using namespace spikesub;

TEST_SUITE("labels") {
  TEST_CASE("counts, outliers and distinct clusters") {
    LabelAssignment a;
    a.k = 4;
    a.labels = {0, 0, 2, -1, 2, 2, -1};
    CHECK(a.counts() == std::vector<std::size_t>{2, 0, 3, 0});
    CHECK(a.outlier_count() == 2);
    CHECK(a.distinct_clusters() == 2);
    CHECK_NOTHROW(a.validate());
  }

  TEST_CASE("validation rejects labels outside [0, k)") {
    LabelAssignment a;
    a.k = 3;
    a.labels = {0, 7};
    CHECK(testing::error_kind([&] { a.validate(); }) == ErrorKind::DataFormat);
    a.labels = {0, -2};
    CHECK(testing::error_kind([&] { a.validate(); }) == ErrorKind::DataFormat);
    a.k = 0;
    a.labels = {};
    CHECK(testing::error_kind([&] { a.validate(); }) == ErrorKind::DataFormat);
  }

  TEST_CASE("canonical form numbers clusters by first appearance") {
    LabelAssignment a;
    a.k = 9;
    a.labels = {5, -1, 5, 8, 2, 8};
    const LabelAssignment c = canonicalize(a);
    CHECK(c.k == 3);
    CHECK(c.labels == std::vector<int>{0, -1, 0, 1, 2, 1});

    LabelAssignment all_out;
    all_out.labels = {-1, -1};
    CHECK(canonicalize(all_out).k == 1);
  }

  TEST_CASE("same partition ignores label names") {
    LabelAssignment a, b;
    a.k = b.k = 3;
    a.labels = {0, 1, 2, 1, -1};
    b.labels = {2, 0, 1, 0, -1};
    CHECK(same_partition(a, b));
    b.labels[4] = 1;
    CHECK_FALSE(same_partition(a, b));
    b.labels.pop_back();
    CHECK_FALSE(same_partition(a, b));
  }
}
