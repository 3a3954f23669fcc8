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

#include "spikesub/spike_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "spikesub/error.hpp"

namespace spikesub {

namespace fs = std::filesystem;

void DetectionConfig::validate() const {
  require(threshold_multiplier > 0.0, "threshold_multiplier must be positive");
  require(pre_peak >= 0 && post_peak >= 0, "pre_peak and post_peak must be non-negative");
  require(lockout_samples >= 0, "lockout_samples must be >= 1 (or 0 for the default)");
}

double compute_rms(std::span<const double> samples) {
  if (samples.empty()) fail(ErrorKind::InvalidArgument, "empty input");
  long double acc = 0.0L;
  for (double v : samples) acc += static_cast<long double>(v) * v;
  return static_cast<double>(std::sqrt(acc / samples.size()));
}

namespace {

double adjusted(double v, Polarity p) {
  switch (p) {
    case Polarity::Negative: return -v;
    case Polarity::Positive: return v;
    case Polarity::Absolute: return std::abs(v);
  }
  return v;
}

bool admits_window(std::int64_t peak, std::int64_t len, const DetectionConfig& cfg) {
  return peak - cfg.pre_peak >= 0 && peak + cfg.post_peak < len;
}

}  // namespace

std::vector<std::int64_t> detect_spikes(const RawSignal& signal, const DetectionConfig& cfg) {
  cfg.validate();
  const auto& x = signal.samples;
  const auto len = static_cast<std::int64_t>(x.size());
  require(len > cfg.window(), "signal shorter than one spike window");

  const double thr = cfg.threshold_multiplier * compute_rms(x);
  const std::int64_t lockout = cfg.effective_lockout();

  std::vector<std::int64_t> peaks;
  std::int64_t i = 0;
  while (i < len) {
    if (!(adjusted(x[i], cfg.polarity) > thr)) {
      ++i;
      continue;
    }
    std::int64_t best = i;
    double best_v = adjusted(x[i], cfg.polarity);
    std::int64_t end = i + 1;
    for (; end < len; ++end) {
      const double v = adjusted(x[end], cfg.polarity);
      if (!(v > thr)) break;
      if (v > best_v) {
        best_v = v;
        best = end;
      }
    }
    if (admits_window(best, len, cfg)) peaks.push_back(best);
    i = std::max(end, best + lockout + 1);
  }
  return peaks;
}

std::vector<std::int64_t> align_peaks(const RawSignal& signal, std::span<const std::int64_t> peaks,
                                      int radius, const DetectionConfig& cfg) {
  const auto& x = signal.samples;
  const auto len = static_cast<std::int64_t>(x.size());
  const std::int64_t lo_bound = cfg.pre_peak;
  const std::int64_t hi_bound = len - cfg.post_peak - 1;
  std::vector<std::int64_t> out;
  out.reserve(peaks.size());
  for (std::int64_t p : peaks) {
    const std::int64_t lo = std::max(lo_bound, p - radius);
    const std::int64_t hi = std::min(hi_bound, p + radius);
    if (lo > hi) {
      out.push_back(p);
      continue;
    }
    std::int64_t best = lo;
    for (std::int64_t j = lo + 1; j <= hi; ++j)
      if (adjusted(x[j], cfg.polarity) > adjusted(x[best], cfg.polarity)) best = j;
    out.push_back(best);
  }
  return out;
}

SpikeMatrix extract_aligned(const RawSignal& signal, std::span<const std::int64_t> peaks,
                            const DetectionConfig& cfg) {
  cfg.validate();
  const auto len = static_cast<std::int64_t>(signal.samples.size());
  const int m = cfg.window();
  SpikeMatrix out;
  out.peak_index = cfg.pre_peak;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.data.resize(m, static_cast<Eigen::Index>(peaks.size()));
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const std::int64_t p = peaks[i];
    if (!admits_window(p, len, cfg)) {
      fail(ErrorKind::InvalidArgument, "peak " + std::to_string(p) + " (spike " + std::to_string(i) +
                                           ") has no full window inside the signal");
    }
    const double* src = signal.samples.data() + (p - cfg.pre_peak);
    for (int r = 0; r < m; ++r) out.data(r, static_cast<Eigen::Index>(i)) = src[r];
  }
  return out;
}

// --- binary helpers -------------------------------------------------------

namespace {

template <typename T>
void put_le(std::string& buf, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  buf.append(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::DataFormat, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T parse_number(const std::string& text, const fs::path& path, std::size_t line_no) {
  const std::string t = trim(text);
  T value{};
  auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    fail(ErrorKind::DataFormat,
         path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + t + "'");
  }
  return value;
}

constexpr std::array<char, 4> kSpkmMagic = {'S', 'P', 'K', 'M'};
constexpr std::size_t kSpkmHeader = 4 + 4 + 4 + 4 + 8;

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::DataFormat, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorKind::DataFormat, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::DataFormat, "cannot rename " + tmp.string() + ": " + ec.message());
}

fs::path sidecar_path(const fs::path& f32_path) {
  fs::path p = f32_path;
  p.replace_extension(".json");
  return p;
}

void write_raw_signal(const fs::path& f32_path, const RawSignal& s) {
  require(s.sample_rate_hz > 0.0, "sample_rate_hz must be positive");
  std::string buf;
  buf.reserve(s.samples.size() * 4);
  for (double v : s.samples) put_le<float>(buf, static_cast<float>(v));
  write_file_atomic(f32_path, buf);

  nlohmann::json meta;
  meta["sample_rate_hz"] = s.sample_rate_hz;
  meta["n_samples"] = s.samples.size();
  meta["dtype"] = "float32le";
  write_file_atomic(sidecar_path(f32_path), meta.dump(2) + "\n");
}

RawSignal read_raw_signal(const fs::path& f32_path) {
  const fs::path meta_path = sidecar_path(f32_path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(slurp(meta_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::DataFormat, meta_path.string() + ": " + e.what());
  }
  if (!meta.contains("sample_rate_hz") || !meta["sample_rate_hz"].is_number())
    fail(ErrorKind::DataFormat, meta_path.string() + ": missing numeric sample_rate_hz");

  RawSignal s;
  s.sample_rate_hz = meta["sample_rate_hz"].get<double>();
  if (!(s.sample_rate_hz > 0.0)) fail(ErrorKind::DataFormat, meta_path.string() + ": sample_rate_hz must be positive");

  const std::string raw = slurp(f32_path);
  if (raw.size() % 4 != 0)
    fail(ErrorKind::DataFormat, f32_path.string() + ": size is not a multiple of 4 bytes");
  const std::size_t n = raw.size() / 4;
  if (meta.contains("n_samples") && meta["n_samples"].get<std::size_t>() != n) {
    fail(ErrorKind::DataFormat, f32_path.string() + ": sidecar says " +
                                    std::to_string(meta["n_samples"].get<std::size_t>()) +
                                    " samples, file holds " + std::to_string(n));
  }
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.samples[i] = get_le<float>(raw.data() + 4 * i);
  return s;
}

void write_spike_matrix(const fs::path& path, const SpikeMatrix& x) {
  std::string buf;
  buf.reserve(kSpkmHeader + 8 * static_cast<std::size_t>(x.data.size()));
  buf.append(kSpkmMagic.data(), kSpkmMagic.size());
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(x.m()));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(x.n()));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(x.peak_index));
  put_le<double>(buf, x.sample_rate_hz);
  for (Eigen::Index j = 0; j < x.data.cols(); ++j)
    for (Eigen::Index i = 0; i < x.data.rows(); ++i) put_le<double>(buf, x.data(i, j));
  write_file_atomic(path, buf);
}

SpikeMatrix read_spike_matrix(const fs::path& path) {
  const std::string raw = slurp(path);
  if (raw.size() < kSpkmHeader || !std::equal(kSpkmMagic.begin(), kSpkmMagic.end(), raw.begin()))
    fail(ErrorKind::DataFormat, path.string() + ": not a SPKM spike matrix");
  const auto m = get_le<std::uint32_t>(raw.data() + 4);
  const auto n = get_le<std::uint32_t>(raw.data() + 8);
  const auto peak = get_le<std::uint32_t>(raw.data() + 12);
  const auto rate = get_le<double>(raw.data() + 16);

  const std::size_t expected = kSpkmHeader + 8ull * m * n;
  if (raw.size() != expected) {
    fail(ErrorKind::DataFormat, path.string() + ": shape mismatch, header says " + std::to_string(m) + "x" +
                                    std::to_string(n) + " (" + std::to_string(expected) + " bytes) but file has " +
                                    std::to_string(raw.size()) + " bytes");
  }
  if (m > 0 && peak >= m)
    fail(ErrorKind::DataFormat, path.string() + ": peak_index " + std::to_string(peak) + " outside [0, m)");
  if (!(rate > 0.0)) fail(ErrorKind::DataFormat, path.string() + ": sample rate must be positive");

  SpikeMatrix x;
  x.peak_index = static_cast<int>(peak);
  x.sample_rate_hz = rate;
  x.data.resize(m, n);
  const char* p = raw.data() + kSpkmHeader;
  for (std::uint32_t j = 0; j < n; ++j)
    for (std::uint32_t i = 0; i < m; ++i, p += 8) x.data(i, j) = get_le<double>(p);
  return x;
}

void write_spike_matrix_csv(const fs::path& path, const SpikeMatrix& x) {
  std::string out;
  for (int i = 0; i < x.m(); ++i) {
    if (i) out += ',';
    out += "s" + std::to_string(i);
  }
  out += '\n';
  for (int j = 0; j < x.n(); ++j) {
    for (int i = 0; i < x.m(); ++i) {
      if (i) out += ',';
      out += format_double(x.data(i, j));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_labels_csv(const fs::path& path, const LabelAssignment& labels) {
  labels.validate();
  std::string out = "# k=" + std::to_string(labels.k) + "\nspike_index,label\n";
  for (std::size_t i = 0; i < labels.labels.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(labels.labels[i]) + "\n";
  write_file_atomic(path, out);
}

LabelAssignment read_labels_csv(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  std::size_t line_no = 0;
  int declared_k = 0;
  bool header_seen = false;
  std::vector<std::pair<std::int64_t, int>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto pos = line.find("k=");
      if (pos != std::string::npos) declared_k = parse_number<int>(line.substr(pos + 2), path, line_no);
      continue;
    }
    if (!header_seen) {
      if (line != "spike_index,label")
        fail(ErrorKind::DataFormat, path.string() + ": expected header 'spike_index,label'");
      header_seen = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 2)
      fail(ErrorKind::DataFormat, path.string() + ":" + std::to_string(line_no) + ": expected 2 columns");
    rows.emplace_back(parse_number<std::int64_t>(cols[0], path, line_no), parse_number<int>(cols[1], path, line_no));
  }
  if (!header_seen) fail(ErrorKind::DataFormat, path.string() + ": missing header");

  LabelAssignment a;
  a.labels.assign(rows.size(), kOutlierLabel);
  std::vector<bool> seen(rows.size(), false);
  int max_label = -1;
  for (const auto& [idx, label] : rows) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= rows.size() || seen[static_cast<std::size_t>(idx)])
      fail(ErrorKind::DataFormat, path.string() + ": spike_index " + std::to_string(idx) +
                                      " is out of range or repeated");
    seen[static_cast<std::size_t>(idx)] = true;
    a.labels[static_cast<std::size_t>(idx)] = label;
    max_label = std::max(max_label, label);
  }
  a.k = declared_k > 0 ? declared_k : std::max(1, max_label + 1);
  a.validate();
  return a;
}

void write_truth_csv(const fs::path& path, const GroundTruth& truth) {
  require(truth.label.size() == truth.size() && truth.overlap.size() == truth.size(),
          "ground truth columns differ in length");
  std::string out = "peak_index,label,overlap\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out += std::to_string(truth.peak_index[i]) + "," + std::to_string(truth.label[i]) + "," +
           (truth.overlap[i] ? "1" : "0") + "\n";
  }
  write_file_atomic(path, out);
}

GroundTruth read_truth_csv(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  GroundTruth t;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "peak_index,label,overlap")
        fail(ErrorKind::DataFormat, path.string() + ": expected header 'peak_index,label,overlap'");
      header_seen = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 3)
      fail(ErrorKind::DataFormat, path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
    t.peak_index.push_back(parse_number<std::int64_t>(cols[0], path, line_no));
    t.label.push_back(parse_number<int>(cols[1], path, line_no));
    const int ov = parse_number<int>(cols[2], path, line_no);
    if (ov != 0 && ov != 1)
      fail(ErrorKind::DataFormat, path.string() + ":" + std::to_string(line_no) + ": overlap must be 0 or 1");
    t.overlap.push_back(ov == 1);
  }
  if (!header_seen) fail(ErrorKind::DataFormat, path.string() + ": missing header");
  return t;
}

}  // namespace spikesub
