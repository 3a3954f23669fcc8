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
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "test_util.hpp"
#include "spikesub/error.hpp"
#include "spikesub/spike_io.hpp"
#include "spikesub/synth.hpp"

using namespace spikesub;
namespace fs = std::filesystem;

namespace {

using testing::TempDir;

RawSignal zeros(std::size_t n) {
  RawSignal s;
  s.samples.assign(n, 0.0);
  return s;
}

}  // namespace

TEST_SUITE("spike_io") {
  TEST_CASE("rms of small vectors") {
    CHECK(compute_rms(std::vector<double>{0, 0, 0, 0}) == 0.0);
    CHECK(compute_rms(std::vector<double>{1, -1, 1, -1}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(compute_rms(std::vector<double>{3, 4}) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK(testing::error_kind([] { compute_rms(std::vector<double>{}); }) == ErrorKind::InvalidArgument);
  }

  TEST_CASE("flat signal has no detections") {
    DetectionConfig dc;
    CHECK(detect_spikes(zeros(1000), dc).empty());
  }

  TEST_CASE("single deflection is found at its minimum") {
    RawSignal s = zeros(400);
    s.samples[199] = -6.0;
    s.samples[200] = -10.0;
    s.samples[201] = -7.0;
    const auto p = detect_spikes(s, DetectionConfig{});
    REQUIRE(p.size() == 1);
    CHECK(p[0] == 200);
  }

  TEST_CASE("lockout suppresses a second deflection") {
    RawSignal s = zeros(400);
    s.samples[200] = -10.0;
    s.samples[205] = -8.0;
    DetectionConfig dc;
    dc.lockout_samples = 20;
    const auto p = detect_spikes(s, dc);
    REQUIRE(p.size() == 1);
    CHECK(p[0] == 200);

    // Within one suprathreshold run the deeper sample wins.
    RawSignal run = zeros(400);
    for (int i = 200; i <= 205; ++i) run.samples[static_cast<std::size_t>(i)] = -8.0;
    run.samples[203] = -12.0;
    CHECK(detect_spikes(run, dc) == std::vector<std::int64_t>{203});

    // Past the lockout the second event is kept.
    dc.lockout_samples = 3;
    CHECK(detect_spikes(s, dc) == std::vector<std::int64_t>{200, 205});
  }

  TEST_CASE("polarity") {
    RawSignal s = zeros(400);
    s.samples[100] = -10.0;
    s.samples[250] = 10.0;
    DetectionConfig dc;
    dc.polarity = Polarity::Positive;
    CHECK(detect_spikes(s, dc) == std::vector<std::int64_t>{250});
    dc.polarity = Polarity::Absolute;
    CHECK(detect_spikes(s, dc) == std::vector<std::int64_t>{100, 250});
  }

  TEST_CASE("peaks without a full window are dropped") {
    RawSignal s = zeros(400);
    s.samples[5] = -10.0;
    s.samples[395] = -10.0;
    s.samples[200] = -10.0;
    CHECK(detect_spikes(s, DetectionConfig{}) == std::vector<std::int64_t>{200});
  }

  TEST_CASE("extract cuts the configured window") {
    RawSignal s;
    s.samples = {0, 1, -9, 1, 0};
    DetectionConfig dc;
    dc.pre_peak = 2;
    dc.post_peak = 2;
    const std::vector<std::int64_t> peaks{2};
    const SpikeMatrix x = extract_aligned(s, peaks, dc);
    REQUIRE(x.m() == 5);
    REQUIRE(x.n() == 1);
    CHECK(x.peak_index == 2);
    for (int i = 0; i < 5; ++i) CHECK(x.data(i, 0) == s.samples[static_cast<std::size_t>(i)]);

    const SpikeMatrix empty = extract_aligned(s, std::vector<std::int64_t>{}, dc);
    CHECK(empty.n() == 0);
    CHECK(empty.m() == 5);

    CHECK(testing::error_kind([&] { extract_aligned(s, std::vector<std::int64_t>{1}, dc); }) == ErrorKind::InvalidArgument);
  }

  TEST_CASE("alignment moves to the local extremum") {
    RawSignal s = zeros(200);
    s.samples[100] = -3.0;
    s.samples[102] = -5.0;
    DetectionConfig dc;
    const std::vector<std::int64_t> peaks{100};
    CHECK(align_peaks(s, peaks, 3, dc) == std::vector<std::int64_t>{102});
    CHECK(align_peaks(s, peaks, 1, dc) == std::vector<std::int64_t>{100});
  }

  TEST_CASE("detection config validation") {
    DetectionConfig dc;
    dc.pre_peak = -1;
    CHECK(testing::error_kind([&] { dc.validate(); }) == ErrorKind::InvalidArgument);
    dc = DetectionConfig{};
    dc.lockout_samples = -2;
    CHECK(testing::error_kind([&] { dc.validate(); }) == ErrorKind::InvalidArgument);
    dc = DetectionConfig{};
    CHECK(dc.effective_lockout() == dc.post_peak);
    CHECK(dc.window() == 64);
  }

  TEST_CASE("noise-free synthetic spikes peak at the alignment index") {
    SynthConfig c;
    c.templates = default_templates(64, 1);
    c.noise_sigma = 0.0;
    c.firing_rate_hz = 5.0;
    c.duration_s = 10.0;
    c.seed = 3;
    const SynthDataset ds = generate(c);
    const auto peaks = detect_spikes(ds.signal, DetectionConfig{});
    const SpikeMatrix x = extract_aligned(ds.signal, peaks, DetectionConfig{});
    REQUIRE(x.n() > 0);
    for (int j = 0; j < x.n(); ++j) {
      Eigen::Index arg = 0;
      x.data.col(j).minCoeff(&arg);
      CHECK(arg == x.peak_index);
    }
  }

  TEST_CASE("detected count tracks suprathreshold ground truth") {
    // One unit, so the refractory period keeps events farther apart than
    // the lockout and every suprathreshold spike is recoverable.
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SynthConfig c;
      c.templates = default_templates(64, 1);
      c.noise_sigma = 0.05;
      c.seed = seed;
      const SynthDataset ds = generate(c);
      const DetectionConfig dc;
      const double thr = dc.threshold_multiplier * compute_rms(ds.signal);
      std::size_t above = 0;
      for (auto t : ds.truth_times)
        if (-ds.signal.samples[static_cast<std::size_t>(t)] > thr) ++above;
      const auto found = detect_spikes(ds.signal, dc).size();
      INFO("seed " << seed << ": " << found << " detected, " << above << " above threshold");
      CHECK(std::abs(static_cast<double>(found) - static_cast<double>(above)) <= 0.02 * static_cast<double>(above));
    }
  }

  TEST_CASE("raw signal round trip") {
    TempDir dir;
    RawSignal s;
    s.sample_rate_hz = 30000.0;
    std::mt19937_64 rng(1);
    std::normal_distribution<float> g;
    for (int i = 0; i < 1000; ++i) s.samples.push_back(static_cast<double>(g(rng)));
    write_raw_signal(dir / "sig.f32", s);
    CHECK(fs::exists(sidecar_path(dir / "sig.f32")));
    const RawSignal r = read_raw_signal(dir / "sig.f32");
    CHECK(r.sample_rate_hz == 30000.0);
    CHECK(r.samples == s.samples);
  }

  TEST_CASE("raw signal format errors") {
    TempDir dir;
    RawSignal s;
    s.samples = {1.0, 2.0, 3.0};
    write_raw_signal(dir / "a.f32", s);
    {
      std::ofstream f(dir / "a.f32", std::ios::binary | std::ios::app);
      f.write("xy", 2);
    }
    CHECK(testing::error_kind([&] { read_raw_signal(dir / "a.f32"); }) == ErrorKind::DataFormat);
    CHECK(testing::error_kind([&] { read_raw_signal(dir / "missing.f32"); }) == ErrorKind::DataFormat);
  }

  TEST_CASE("spike matrix round trip") {
    TempDir dir;
    std::mt19937_64 rng(2);
    SpikeMatrix x;
    x.data = testing::random_matrix(64, 10, rng);
    x.peak_index = 20;
    x.sample_rate_hz = 24000.0;
    write_spike_matrix(dir / "x.spkm", x);
    const SpikeMatrix y = read_spike_matrix(dir / "x.spkm");
    CHECK(y.data == x.data);
    CHECK(y.peak_index == 20);
    CHECK(y.sample_rate_hz == 24000.0);

    SpikeMatrix empty;
    empty.data.resize(64, 0);
    empty.peak_index = 20;
    write_spike_matrix(dir / "e.spkm", empty);
    CHECK(read_spike_matrix(dir / "e.spkm").n() == 0);

    write_spike_matrix_csv(dir / "x.csv", x);
    std::ifstream in(dir / "x.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 11);
  }

  TEST_CASE("spike matrix shape mismatch") {
    TempDir dir;
    SpikeMatrix x;
    x.data = Eigen::MatrixXd::Ones(63, 1);
    x.peak_index = 20;
    write_spike_matrix(dir / "x.spkm", x);
    // Rewrite the header to claim 64 rows.
    std::fstream f(dir / "x.spkm", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);
    const unsigned char m64[4] = {64, 0, 0, 0};
    f.write(reinterpret_cast<const char*>(m64), 4);
    f.close();
    CHECK(testing::error_kind([&] { read_spike_matrix(dir / "x.spkm"); }) == ErrorKind::DataFormat);

    std::ofstream(dir / "junk.spkm") << "not a matrix";
    CHECK(testing::error_kind([&] { read_spike_matrix(dir / "junk.spkm"); }) == ErrorKind::DataFormat);
  }

  TEST_CASE("labels round trip and validation") {
    TempDir dir;
    LabelAssignment a;
    a.k = 3;
    a.labels = {0, 2, -1, 1, 1};
    write_labels_csv(dir / "l.csv", a);
    const LabelAssignment b = read_labels_csv(dir / "l.csv");
    CHECK(b.k == 3);
    CHECK(b.labels == a.labels);

    std::ofstream(dir / "bad.csv") << "# k=3\nspike_index,label\n0,0\n1,7\n";
    CHECK(testing::error_kind([&] { read_labels_csv(dir / "bad.csv"); }) == ErrorKind::DataFormat);
    std::ofstream(dir / "dup.csv") << "spike_index,label\n0,0\n0,1\n";
    CHECK(testing::error_kind([&] { read_labels_csv(dir / "dup.csv"); }) == ErrorKind::DataFormat);
    std::ofstream(dir / "hdr.csv") << "index,label\n0,0\n";
    CHECK(testing::error_kind([&] { read_labels_csv(dir / "hdr.csv"); }) == ErrorKind::DataFormat);

    // Without a declared k the largest label decides.
    std::ofstream(dir / "nok.csv") << "spike_index,label\n1,4\n0,-1\n";
    const LabelAssignment c = read_labels_csv(dir / "nok.csv");
    CHECK(c.k == 5);
    CHECK(c.labels == std::vector<int>{-1, 4});
  }

  TEST_CASE("truth round trip") {
    TempDir dir;
    GroundTruth t;
    t.peak_index = {10, 50, 90};
    t.label = {0, 1, 0};
    t.overlap = {false, true, false};
    write_truth_csv(dir / "t.csv", t);
    const GroundTruth r = read_truth_csv(dir / "t.csv");
    CHECK(r.peak_index == t.peak_index);
    CHECK(r.label == t.label);
    CHECK(r.overlap == t.overlap);
    std::ofstream(dir / "bad.csv") << "peak_index,label,overlap\n1,0,2\n";
    CHECK(testing::error_kind([&] { read_truth_csv(dir / "bad.csv"); }) == ErrorKind::DataFormat);
  }

  TEST_CASE("atomic writes leave no temporary files") {
    TempDir dir;
    write_file_atomic(dir / "f.txt", "hello");
    write_file_atomic(dir / "f.txt", "world");
    std::ifstream in(dir / "f.txt");
    std::string s;
    in >> s;
    CHECK(s == "world");
    int files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++files;
    CHECK(files == 1);
  }
}
