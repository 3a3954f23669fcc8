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


#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <json.hpp>

#include "spikesub/error.hpp"
#include "spikesub/eval.hpp"
#include "spikesub/sorters.hpp"
#include "spikesub/spike_io.hpp"
#include "spikesub/synth.hpp"
#include "spikesub/version.hpp"
#include "sweep.hpp"

namespace spikesub::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Options whose value is a filesystem path; made absolute in manifests so a
// rerun does not depend on the working directory.
const std::set<std::string> kPathFlags = {"--input", "--out", "--truth", "--labels", "--peaks", "--peaks-from"};

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

std::uint64_t seed_from_env() {
  const char* raw = std::getenv(kSeedEnv);
  if (raw == nullptr || *raw == '\0') return 0;
  std::uint64_t v = 0;
  const std::string s(raw);
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    fail(ErrorKind::InvalidArgument, std::string(kSeedEnv) + " is not an unsigned integer: '" + s + "'");
  return v;
}

fs::path with_suffix(const std::string& prefix, const std::string& suffix) { return fs::path(prefix + suffix); }

void ensure_parent(const fs::path& p) {
  const fs::path parent = p.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) fail(ErrorKind::DataFormat, "cannot create directory " + parent.string() + ": " + ec.message());
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// State shared by one command invocation.
struct Run {
  std::string command;
  std::vector<std::string> argv;  // full command line, subcommand first
  std::uint64_t seed = 0;
  bool uses_seed = false;
  json config = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  std::string started = utc_now();

  void input(const fs::path& p) { inputs.push_back(fs::absolute(p).lexically_normal().string()); }
  void output(const fs::path& p) { outputs.push_back(fs::absolute(p).lexically_normal().string()); }
};

std::vector<std::string> canonical_argv(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    const auto eq = a.find('=');
    if (eq != std::string::npos && kPathFlags.count(a.substr(0, eq))) {
      out.push_back(a.substr(0, eq));
      out.push_back(fs::absolute(a.substr(eq + 1)).lexically_normal().string());
      continue;
    }
    out.push_back(a);
    if (kPathFlags.count(a) && i + 1 < args.size()) {
      out.push_back(fs::absolute(args[i + 1]).lexically_normal().string());
      ++i;
    }
  }
  return out;
}

void write_manifest(Run& run, const std::string& prefix, std::ostream& out) {
  const fs::path path = with_suffix(prefix, "." + run.command + ".manifest.json");
  json j;
  j["command"] = run.command;
  j["argv"] = run.argv;
  j["config"] = run.config;
  if (run.uses_seed) j["seed"] = run.seed;
  j["inputs"] = run.inputs;
  j["outputs"] = run.outputs;
  j["version"] = kVersion;
  j["started_utc"] = run.started;
  j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - run.t0).count();
  ensure_parent(path);
  write_file_atomic(path, j.dump(2) + "\n");
  out << "manifest: " << path.string() << "\n";
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
  int templates = 3;
  std::string mode = "hard";
  int template_length = 64;
  double sigma = 0.1;
  double duration = 60.0;
  double rate = 20.0;
  double refractory = 2.0;
  double fs = 24000.0;
  int overlap_window = 64;
  double noise_exponent = 1.5;
  std::string out;
};

void cmd_synth(const SynthOpts& o, Run& run, std::ostream& out) {
  SynthConfig cfg;
  cfg.templates = default_templates(o.template_length, o.templates, parse_mode(o.mode));
  cfg.noise_sigma = o.sigma;
  cfg.duration_s = o.duration;
  cfg.firing_rate_hz = o.rate;
  cfg.refractory_ms = o.refractory;
  cfg.sample_rate_hz = o.fs;
  cfg.overlap_window = o.overlap_window;
  cfg.noise_exponent = o.noise_exponent;
  cfg.seed = run.seed;
  cfg.validate();
  run.config = {{"templates", o.templates},       {"mode", o.mode},
                {"template_length", o.template_length}, {"noise_sigma", o.sigma},
                {"duration_s", o.duration},        {"firing_rate_hz", o.rate},
                {"refractory_ms", o.refractory},   {"sample_rate_hz", o.fs},
                {"overlap_window", o.overlap_window}, {"noise_exponent", o.noise_exponent},
                {"band_low_hz", cfg.band_low_hz},  {"band_high_hz", cfg.band_high_hz},
                {"band_order", cfg.band_order},    {"peak_index", cfg.peak_index}};

  const SynthDataset ds = generate(cfg);
  const fs::path sig = with_suffix(o.out, ".f32");
  const fs::path truth = with_suffix(o.out, ".truth.csv");
  ensure_parent(sig);
  write_raw_signal(sig, ds.signal);
  write_truth_csv(truth, ds.truth());
  run.output(sig);
  run.output(sidecar_path(sig));
  run.output(truth);
  const auto overlaps = std::count(ds.overlap_flags.begin(), ds.overlap_flags.end(), true);
  out << "signal: " << sig.string() << " (" << ds.signal.samples.size() << " samples)\n"
      << "truth: " << truth.string() << " (" << ds.truth_times.size() << " spikes, " << overlaps
      << " overlapping)\n";
}

// ---------------------------------------------------------------- detect

struct DetectOpts {
  std::string input;
  std::string out;
  double threshold = 3.0;
  Polarity polarity = Polarity::Negative;
  int lockout = 0;
  int pre = 20;
  int post = 43;
  int align_radius = 0;
  std::string peaks_from;
};

std::string polarity_name(Polarity p) {
  switch (p) {
    case Polarity::Negative: return "neg";
    case Polarity::Positive: return "pos";
    case Polarity::Absolute: return "abs";
  }
  return "neg";
}

void write_peaks_csv(const fs::path& path, std::span<const std::int64_t> peaks) {
  std::string s = "spike_index,peak_index\n";
  for (std::size_t i = 0; i < peaks.size(); ++i) s += std::to_string(i) + "," + std::to_string(peaks[i]) + "\n";
  write_file_atomic(path, s);
}

std::vector<std::int64_t> read_peaks_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::DataFormat, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "spike_index,peak_index")
    fail(ErrorKind::DataFormat, path.string() + ": expected header 'spike_index,peak_index'");
  std::vector<std::int64_t> peaks;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    long long idx = 0, peak = 0;
    const char* b = line.data();
    const char* e = b + line.size();
    bool ok = comma != std::string::npos;
    if (ok) {
      auto r1 = std::from_chars(b, b + comma, idx);
      auto r2 = std::from_chars(b + comma + 1, e, peak);
      ok = r1.ec == std::errc() && r1.ptr == b + comma && r2.ec == std::errc() && r2.ptr == e;
    }
    if (!ok || idx != static_cast<long long>(peaks.size()))
      fail(ErrorKind::DataFormat, path.string() + ":" + std::to_string(line_no) + ": malformed row");
    peaks.push_back(peak);
  }
  return peaks;
}

void cmd_detect(const DetectOpts& o, Run& run, std::ostream& out) {
  DetectionConfig dc;
  dc.threshold_multiplier = o.threshold;
  dc.polarity = o.polarity;
  dc.lockout_samples = o.lockout;
  dc.pre_peak = o.pre;
  dc.post_peak = o.post;
  dc.validate();
  require(o.align_radius >= 0, "--align-radius must be >= 0");
  run.config = {{"threshold_multiplier", o.threshold}, {"polarity", polarity_name(o.polarity)},
                {"lockout_samples", dc.effective_lockout()}, {"pre_peak", o.pre},
                {"post_peak", o.post}, {"align_radius", o.align_radius},
                {"peaks_from", o.peaks_from.empty() ? json(nullptr) : json(o.peaks_from)}};

  const RawSignal sig = read_raw_signal(o.input);
  run.input(o.input);
  std::vector<std::int64_t> peaks;
  if (!o.peaks_from.empty()) {
    peaks = read_truth_csv(o.peaks_from).peak_index;
    run.input(o.peaks_from);
  } else {
    peaks = detect_spikes(sig, dc);
  }
  if (o.align_radius > 0) peaks = align_peaks(sig, peaks, o.align_radius, dc);
  const SpikeMatrix x = extract_aligned(sig, peaks, dc);

  const fs::path spkm = with_suffix(o.out, ".spkm");
  const fs::path pk = with_suffix(o.out, ".peaks.csv");
  ensure_parent(spkm);
  write_spike_matrix(spkm, x);
  write_peaks_csv(pk, peaks);
  run.output(spkm);
  run.output(pk);
  out << "spikes: " << spkm.string() << " (" << x.n() << " x " << x.m() << ")\n";
}

// ---------------------------------------------------------------- sort

struct SortOpts {
  std::string input;
  std::string out;
  std::string algo;
  std::optional<int> k;
  std::optional<int> d;
  double ad_threshold = 40.0;
  int min_cluster_size = 0;
  int max_depth = 10;
  int k_max = 10;
  int restarts = 10;
  int starts = 4;
  int max_outer = 50;
  bool distance_rule = false;
  double distance_sd = 4.0;
};

json algo1_json(const Algo1Diagnostics& a) {
  json trace = json::array();
  for (const auto& p : a.trace) trace.push_back({{"k", p.k}, {"peaks", p.peaks}});
  return {{"pca_peaks", a.pca_peaks},
          {"trace", trace},
          {"single_cluster", a.single_cluster},
          {"stopped_by_rule", a.stopped_by_rule},
          {"stopped_twice_below", a.stopped_twice_below},
          {"cap_hit", a.cap_hit},
          {"accepted_k", a.accepted_k}};
}

json algo2_json(const Algo2Diagnostics& a) {
  json nodes = json::array();
  for (const auto& nd : a.nodes) {
    nodes.push_back({{"id", nd.id},
                     {"parent", nd.parent},
                     {"depth", nd.depth},
                     {"size", nd.size},
                     {"ad", std::isnan(nd.ad) ? json(nullptr) : json(nd.ad)},
                     {"mark", to_string(nd.mark)},
                     {"degenerate", nd.degenerate},
                     {"depth_capped", nd.depth_capped},
                     {"label", nd.label}});
  }
  return {{"min_cluster_size", a.min_cluster_size},
          {"depth_cap_hit", a.depth_cap_hit},
          {"distance_outliers", a.distance_outliers},
          {"nodes", nodes}};
}

void write_features_csv(const fs::path& path, const Eigen::MatrixXd& f, const LabelAssignment& labels) {
  std::string s = "spike_index,label";
  for (Eigen::Index r = 0; r < f.rows(); ++r) s += ",f" + std::to_string(r);
  s += "\n";
  for (Eigen::Index i = 0; i < f.cols(); ++i) {
    s += std::to_string(i) + "," + std::to_string(labels.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index r = 0; r < f.rows(); ++r) s += "," + num(f(r, i));
    s += "\n";
  }
  write_file_atomic(path, s);
}

void cmd_sort(const SortOpts& o, Run& run, std::ostream& out) {
  const bool baseline = o.algo == "pca-kmeans";
  if (baseline && !o.k) throw CLI::ValidationError("--k", "--algo pca-kmeans needs --k (the baseline is supervised)");
  if (!baseline && o.k) throw CLI::ValidationError("--k", "--k applies only to --algo pca-kmeans");
  if (o.algo == "2" && o.d && *o.d != 1) throw CLI::ValidationError("--d", "--algo 2 works in one dimension");

  const SpikeMatrix x = read_spike_matrix(o.input);
  run.input(o.input);

  SortResult r;
  if (o.algo == "1") {
    Algo1Config c;
    c.d_max = o.d.value_or(2);
    c.k_max = o.k_max;
    c.seed = run.seed;
    c.kmeans_restarts = o.restarts;
    c.lda_km_starts = o.starts;
    c.max_outer = o.max_outer;
    c.validate();
    run.config = {{"algorithm", "1"},         {"d_max", c.d_max},
                  {"k_max", c.k_max},         {"kmeans_restarts", c.kmeans_restarts},
                  {"lda_km_starts", c.lda_km_starts}, {"max_outer", c.max_outer},
                  {"histogram", {{"min_bins", c.histogram.min_bins}, {"max_bins", c.histogram.max_bins},
                                 {"smoothing_bins", c.histogram.smoothing_bins}}},
                  {"peaks", {{"prominence_frac", c.peaks.prominence_frac}, {"height_frac", c.peaks.height_frac}}}};
    r = sort_algo1(x, c);
  } else if (o.algo == "2") {
    Algo2Config c;
    c.ad_threshold = o.ad_threshold;
    c.min_cluster_size = o.min_cluster_size;
    c.max_depth = o.max_depth;
    c.seed = run.seed;
    c.kmeans_restarts = o.restarts;
    c.lda_km_starts = o.starts;
    c.max_outer = o.max_outer;
    c.distance_rule = o.distance_rule;
    c.distance_sd = o.distance_sd;
    c.validate();
    run.config = {{"algorithm", "2"},
                  {"ad_threshold", c.ad_threshold},
                  {"min_cluster_size", c.resolved_min_cluster_size(static_cast<std::size_t>(x.n()))},
                  {"max_depth", c.max_depth},
                  {"kmeans_restarts", c.kmeans_restarts},
                  {"lda_km_starts", c.lda_km_starts},
                  {"max_outer", c.max_outer},
                  {"distance_rule", c.distance_rule},
                  {"distance_sd", c.distance_sd}};
    r = sort_algo2(x, c);
  } else {
    const int d = o.d.value_or(10);
    run.config = {{"algorithm", "pca-kmeans"}, {"k", *o.k}, {"d", d}, {"kmeans_restarts", o.restarts}};
    r = sort_pca_kmeans(x, *o.k, d, run.seed, o.restarts);
  }

  const fs::path labels = with_suffix(o.out, ".labels.csv");
  const fs::path feats = with_suffix(o.out, ".features.csv");
  const fs::path diag = with_suffix(o.out, ".diag.json");
  ensure_parent(labels);
  write_labels_csv(labels, r.assignment);
  write_features_csv(feats, r.features, r.assignment);

  json j = {{"algorithm", r.algorithm},
            {"n", x.n()},
            {"detected_k", r.detected_k},
            {"outliers", r.assignment.outlier_count()},
            {"feature_dim", r.features.rows()},
            {"projection_degenerate", r.projection.degenerate}};
  json sizes = json::array();
  for (auto c : r.assignment.counts()) sizes.push_back(c);
  j["cluster_sizes"] = sizes;
  if (r.algo1) j["algo1"] = algo1_json(*r.algo1);
  if (r.algo2) j["algo2"] = algo2_json(*r.algo2);
  write_file_atomic(diag, j.dump(2) + "\n");
  run.output(labels);
  run.output(feats);
  run.output(diag);
  out << "algorithm " << r.algorithm << ": K=" << r.detected_k << ", outliers=" << r.assignment.outlier_count()
      << "\nlabels: " << labels.string() << "\n";
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string labels;
  std::string truth;
  std::string peaks;
  int tolerance = 3;
  double fs = 24000.0;
  std::string out;
};

// Pairs each detected peak with the closest unused truth peak within the
// tolerance. Returns the truth row per detected spike, or -1.
std::vector<long long> match_peaks(std::span<const std::int64_t> detected, std::span<const std::int64_t> truth,
                                   int tolerance) {
  std::vector<std::size_t> order(truth.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return truth[a] < truth[b]; });
  std::vector<std::int64_t> sorted(truth.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = truth[order[i]];
  std::vector<bool> used(truth.size(), false);

  std::vector<std::size_t> dorder(detected.size());
  for (std::size_t i = 0; i < dorder.size(); ++i) dorder[i] = i;
  std::stable_sort(dorder.begin(), dorder.end(), [&](std::size_t a, std::size_t b) { return detected[a] < detected[b]; });

  std::vector<long long> out(detected.size(), -1);
  for (std::size_t di : dorder) {
    const std::int64_t p = detected[di];
    auto it = std::lower_bound(sorted.begin(), sorted.end(), p - tolerance);
    long long best = -1;
    std::int64_t best_gap = 0;
    for (; it != sorted.end() && *it <= p + tolerance; ++it) {
      const auto pos = static_cast<std::size_t>(it - sorted.begin());
      if (used[pos]) continue;
      const std::int64_t gap = std::abs(*it - p);
      if (best < 0 || gap < best_gap) {
        best = static_cast<long long>(pos);
        best_gap = gap;
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = true;
      out[di] = static_cast<long long>(order[static_cast<std::size_t>(best)]);
    }
  }
  return out;
}

void cmd_eval(const EvalOpts& o, Run& run, std::ostream& out) {
  require(o.tolerance >= 0, "--tolerance must be >= 0");
  require(o.fs > 0.0, "--fs must be positive");
  run.config = {{"tolerance", o.tolerance}, {"sample_rate_hz", o.fs}, {"match_by_time", !o.peaks.empty()}};
  const LabelAssignment found = read_labels_csv(o.labels);
  const GroundTruth truth = read_truth_csv(o.truth);
  run.input(o.labels);
  run.input(o.truth);

  std::vector<int> truth_labels;
  std::vector<bool> overlap;
  std::vector<std::int64_t> times;
  std::size_t time_matched = 0;
  if (!o.peaks.empty()) {
    times = read_peaks_csv(o.peaks);
    run.input(o.peaks);
    if (times.size() != found.size())
      fail(ErrorKind::DataFormat, o.peaks + " has " + std::to_string(times.size()) + " spikes but " + o.labels +
                                      " has " + std::to_string(found.size()));
    const auto rows = match_peaks(times, truth.peak_index, o.tolerance);
    truth_labels.assign(found.size(), -1);
    overlap.assign(found.size(), false);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] < 0) continue;
      const auto r = static_cast<std::size_t>(rows[i]);
      truth_labels[i] = truth.label[r];
      overlap[i] = truth.overlap[r];
      ++time_matched;
    }
  } else {
    if (truth.size() != found.size())
      fail(ErrorKind::DataFormat, o.labels + " has " + std::to_string(found.size()) + " spikes but " + o.truth +
                                      " has " + std::to_string(truth.size()) + "; pass --peaks to match by time");
    truth_labels = truth.label;
    overlap = truth.overlap;
    times = truth.peak_index;
  }

  const EvalReport rep = match_and_score(found, truth_labels, overlap);
  std::string report = format_report(rep);
  if (!o.peaks.empty()) {
    report += "detected=" + std::to_string(found.size()) + "\n";
    report += "truth_events=" + std::to_string(truth.size()) + "\n";
    report += "time_matched=" + std::to_string(time_matched) + "\n";
  }

  std::string isi = "cluster,bin_lo_log10_ms,bin_hi_log10_ms,count\n";
  const auto counts = found.counts();
  for (int c = 0; c < found.k; ++c) {
    if (counts[static_cast<std::size_t>(c)] < 2) continue;
    const Histogram h = isi_histogram(times, found.labels, o.fs, c);
    for (int b = 0; b < h.bins(); ++b) {
      const auto bi = static_cast<std::size_t>(b);
      isi += std::to_string(c) + "," + num(h.edges[bi]) + "," + num(h.edges[bi + 1]) + "," +
             std::to_string(h.counts[bi]) + "\n";
    }
  }

  const fs::path rp = with_suffix(o.out, ".report.txt");
  const fs::path cp = with_suffix(o.out, ".confusion.csv");
  const fs::path ip = with_suffix(o.out, ".isi.csv");
  ensure_parent(rp);
  write_file_atomic(rp, report);
  write_file_atomic(cp, confusion_csv(rep));
  write_file_atomic(ip, isi);
  run.output(rp);
  run.output(cp);
  run.output(ip);
  out << report;
}

// ---------------------------------------------------------------- features

struct FeaturesOpts {
  std::string input;
  std::string labels;
  int d = 2;
  std::string out;
};

// Discriminant projection of labelled spikes. Directions beyond the K-1
// supported by the between-class scatter are seeded from PCA before ITR.
Projection labelled_projection(const Eigen::MatrixXd& x, const LabelAssignment& labels, int d) {
  if (labels.distinct_clusters() < 2) return pca_basis(x, d);
  const LabelAssignment canon = canonicalize(labels);
  const ScatterPair s = scatter(x, canon);
  if (d <= s.k() - 1) return itr_trace_ratio(s, d).projection;
  const Projection lda = lda_ratio_trace(s, s.k() - 1);
  const Projection pca = pca_basis(x, d);
  Eigen::MatrixXd stacked(x.rows(), lda.d() + pca.d());
  stacked << lda.basis, pca.basis;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
  ItrOptions opts;
  opts.init = Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), d));
  return itr_trace_ratio(s, d, opts).projection;
}

void cmd_features(const FeaturesOpts& o, Run& run, std::ostream& out) {
  const SpikeMatrix x = read_spike_matrix(o.input);
  const LabelAssignment labels = read_labels_csv(o.labels);
  run.input(o.input);
  run.input(o.labels);
  if (static_cast<int>(labels.size()) != x.n())
    fail(ErrorKind::DataFormat, o.labels + " has " + std::to_string(labels.size()) + " spikes but " + o.input +
                                    " has " + std::to_string(x.n()));
  if (o.d < 1 || o.d > x.m()) throw CLI::ValidationError("--d", "must lie in [1, " + std::to_string(x.m()) + "]");
  const HistogramConfig hc;
  run.config = {{"d", o.d},
                {"histogram", {{"min_bins", hc.min_bins}, {"max_bins", hc.max_bins},
                               {"smoothing_bins", hc.smoothing_bins}}}};

  const Projection p = labelled_projection(x.data, labels, o.d);
  const Eigen::MatrixXd f = project(x.data, p);
  std::vector<double> first(static_cast<std::size_t>(f.cols()));
  for (Eigen::Index i = 0; i < f.cols(); ++i) first[static_cast<std::size_t>(i)] = f(0, i);
  const Histogram h = histogram(first, hc);

  std::string hist = "bin_lo,bin_hi,count,smoothed\n";
  for (int b = 0; b < h.bins(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    hist += num(h.edges[bi]) + "," + num(h.edges[bi + 1]) + "," + std::to_string(h.counts[bi]) + "," +
            num(h.smoothed[bi]) + "\n";
  }

  const fs::path fp = with_suffix(o.out, ".features.csv");
  const fs::path hp = with_suffix(o.out, ".hist.csv");
  ensure_parent(fp);
  write_features_csv(fp, f, labels);
  write_file_atomic(hp, hist);
  run.output(fp);
  run.output(hp);
  out << "features: " << fp.string() << " (" << f.cols() << " x " << f.rows() << "), histogram peaks "
      << count_peaks(h) << "\n";
}

// ---------------------------------------------------------------- sweep

struct SweepOpts {
  std::vector<std::string> modes = {"hard"};
  std::vector<double> sigmas = {0.05, 0.1, 0.15, 0.2};
  int seeds = 5;
  int templates = 3;
  double duration = 60.0;
  std::string out;
};

void cmd_sweep(const SweepOpts& o, Run& run, std::ostream& out) {
  require(o.seeds >= 1, "--seeds must be >= 1");
  for (const auto& m : o.modes) parse_mode(m);
  run.config = {{"modes", o.modes}, {"sigmas", o.sigmas},   {"seeds", o.seeds},
                {"templates", o.templates}, {"duration_s", o.duration}, {"pca_d", {10, 2}}};

  std::string runs = "set,sigma_n,seed,n,overlap_fraction,algo1_k,algo1_acc,algo2_k,algo2_acc,algo2_outliers,"
                     "pca10_acc,pca2_acc,algo1_seconds,algo2_seconds\n";
  std::string table = "set,sigma_n,algo1_acc,algo1_k_hits,algo2_acc,algo2_k_hits,pca10_acc,pca2_acc\n";
  for (const auto& m : o.modes) {
    for (double sigma : o.sigmas) {
      double a1 = 0, a2 = 0, p10 = 0, p2 = 0;
      int h1 = 0, h2 = 0;
      for (int s = 1; s <= o.seeds; ++s) {
        CellOptions c;
        c.mode = parse_mode(m);
        c.templates = o.templates;
        c.sigma = sigma;
        c.duration_s = o.duration;
        c.seed = run.seed + static_cast<std::uint64_t>(s);
        const CellResult r = run_cell(c);
        runs += m + "," + num(sigma) + "," + std::to_string(c.seed) + "," + std::to_string(r.n) + "," +
                num(r.overlap_fraction) + "," + std::to_string(r.algo1_k) + "," + num(r.algo1_acc) + "," +
                std::to_string(r.algo2_k) + "," + num(r.algo2_acc) + "," + std::to_string(r.algo2_outliers) +
                "," + num(r.pca_high_acc) + "," + num(r.pca_low_acc) + "," + num(r.algo1_seconds) + "," +
                num(r.algo2_seconds) + "\n";
        a1 += r.algo1_acc;
        a2 += r.algo2_acc;
        p10 += r.pca_high_acc;
        p2 += r.pca_low_acc;
        h1 += r.algo1_k == o.templates;
        h2 += r.algo2_k == o.templates;
      }
      const double ns = o.seeds;
      table += m + "," + num(sigma) + "," + num(a1 / ns) + "," + std::to_string(h1) + "," + num(a2 / ns) + "," +
               std::to_string(h2) + "," + num(p10 / ns) + "," + num(p2 / ns) + "\n";
      char line[160];
      std::snprintf(line, sizeof line, "%s sigma=%.3g  algo1 %.2f%% (%d/%d)  algo2 %.2f%% (%d/%d)  pca10 %.2f%%  pca2 %.2f%%\n",
                    m.c_str(), sigma, a1 / ns, h1, o.seeds, a2 / ns, h2, o.seeds, p10 / ns, p2 / ns);
      out << line << std::flush;
    }
  }
  // The timing columns differ between runs; the table itself is deterministic.
  const fs::path tp = with_suffix(o.out, ".table.csv");
  const fs::path rp = with_suffix(o.out, ".runs.csv");
  ensure_parent(tp);
  write_file_atomic(tp, table);
  write_file_atomic(rp, runs);
  run.output(tp);
  run.output(rp);
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return kExitUsage;
    case ErrorKind::DataFormat: return kExitDataFormat;
    case ErrorKind::Numerical: return kExitNumerical;
  }
  return 1;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth);

int rerun(const std::string& manifest, std::ostream& out, std::ostream& err, int depth) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorKind::DataFormat, "cannot open " + manifest);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::DataFormat, manifest + ": " + e.what());
  }
  if (!j.contains("argv") || !j["argv"].is_array() || j["argv"].empty())
    fail(ErrorKind::DataFormat, manifest + ": missing argv");
  std::vector<std::string> argv;
  for (const auto& a : j["argv"]) {
    if (!a.is_string()) fail(ErrorKind::DataFormat, manifest + ": argv entries must be strings");
    argv.push_back(a.get<std::string>());
  }
  if (argv.front() == "rerun") fail(ErrorKind::DataFormat, manifest + ": refusing to rerun a rerun");
  if (j.contains("version") && j["version"] != kVersion)
    err << "warning: manifest written by version " << j["version"].dump() << ", running " << kVersion << "\n";
  return dispatch(argv, out, err, depth + 1);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
  CLI::App app{"Spike sorting with discriminant subspace clustering", "spikesub"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough(false);

  std::uint64_t seed = 0;
  std::map<std::string, CLI::Option*> seed_opts;
  auto add_seed = [&](CLI::App* sub) {
    seed_opts[sub->get_name()] =
        sub->add_option("--seed", seed, std::string("Random seed (default: $") + kSeedEnv + " or 0)");
  };

  SynthOpts so;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic recording with ground truth");
  synth->add_option("--templates", so.templates, "Number of neurons (1-5)")->check(CLI::Range(1, 5));
  synth->add_option("--mode", so.mode, "Template family")->check(CLI::IsMember({"hard", "easy"}));
  synth->add_option("--template-length", so.template_length, "Samples per template")->check(CLI::Range(32, 4096));
  synth->add_option("--sigma", so.sigma, "Noise SD relative to unit peak amplitude")->check(CLI::NonNegativeNumber);
  synth->add_option("--duration", so.duration, "Recording length in seconds")->check(CLI::PositiveNumber);
  synth->add_option("--rate", so.rate, "Firing rate per neuron in Hz")->check(CLI::PositiveNumber);
  synth->add_option("--refractory", so.refractory, "Refractory period in ms")->check(CLI::NonNegativeNumber);
  synth->add_option("--fs", so.fs, "Sample rate in Hz")->check(CLI::PositiveNumber);
  synth->add_option("--overlap-window", so.overlap_window, "Overlap window in samples")->check(CLI::NonNegativeNumber);
  synth->add_option("--noise-exponent", so.noise_exponent, "Noise spectrum exponent")->check(CLI::NonNegativeNumber);
  synth->add_option("--out", so.out, "Output prefix")->required();
  add_seed(synth);

  DetectOpts dopt;
  const std::map<std::string, Polarity> polarities = {
      {"neg", Polarity::Negative}, {"pos", Polarity::Positive}, {"abs", Polarity::Absolute}};
  auto* detect = app.add_subcommand("detect", "Threshold a recording and cut aligned spike windows");
  detect->add_option("--input", dopt.input, "Raw .f32 signal")->required();
  detect->add_option("--out", dopt.out, "Output prefix")->required();
  detect->add_option("--threshold", dopt.threshold, "Threshold in multiples of RMS")->check(CLI::PositiveNumber);
  detect->add_option("--polarity", dopt.polarity, "neg, pos or abs")
      ->transform(CLI::CheckedTransformer(polarities, CLI::ignore_case));
  detect->add_option("--lockout", dopt.lockout, "Dead time after a detection (0: post-peak length)")
      ->check(CLI::NonNegativeNumber);
  detect->add_option("--pre", dopt.pre, "Samples before the peak")->check(CLI::NonNegativeNumber);
  detect->add_option("--post", dopt.post, "Samples after the peak")->check(CLI::NonNegativeNumber);
  detect->add_option("--align-radius", dopt.align_radius, "Re-centre peaks within this radius")
      ->check(CLI::NonNegativeNumber);
  detect->add_option("--peaks-from", dopt.peaks_from, "Cut at the peaks of a truth CSV instead of detecting");

  SortOpts sopt;
  auto* sort = app.add_subcommand("sort", "Cluster a spike matrix");
  sort->add_option("--input", sopt.input, "Spike matrix (.spkm)")->required();
  sort->add_option("--out", sopt.out, "Output prefix")->required();
  sort->add_option("--algo", sopt.algo, "1, 2 or pca-kmeans")->required()->check(CLI::IsMember({"1", "2", "pca-kmeans"}));
  sort->add_option("--k", sopt.k, "Cluster count (pca-kmeans only)")->check(CLI::PositiveNumber);
  sort->add_option("--d", sopt.d, "Feature dimension (algo 1: upper bound)")->check(CLI::PositiveNumber);
  sort->add_option("--ad-threshold", sopt.ad_threshold, "Anderson-Darling split threshold")->check(CLI::PositiveNumber);
  sort->add_option("--min-cluster-size", sopt.min_cluster_size, "Smallest kept cluster (0: automatic)")
      ->check(CLI::NonNegativeNumber);
  sort->add_option("--max-depth", sopt.max_depth, "Split tree depth cap")->check(CLI::PositiveNumber);
  sort->add_option("--k-max", sopt.k_max, "Largest K tried by algo 1")->check(CLI::Range(2, 1000));
  sort->add_option("--restarts", sopt.restarts, "k-means restarts")->check(CLI::PositiveNumber);
  sort->add_option("--starts", sopt.starts, "LDA-Km starts")->check(CLI::PositiveNumber);
  sort->add_option("--max-outer", sopt.max_outer, "LDA-Km outer iterations")->check(CLI::PositiveNumber);
  sort->add_flag("--distance-rule", sopt.distance_rule, "Mark far-from-mean spikes as outliers (algo 2)");
  sort->add_option("--distance-sd", sopt.distance_sd, "Distance rule cut in SDs")->check(CLI::PositiveNumber);
  add_seed(sort);

  EvalOpts eopt;
  auto* eval = app.add_subcommand("eval", "Score labels against ground truth");
  eval->add_option("--labels", eopt.labels, "Labels CSV")->required();
  eval->add_option("--truth", eopt.truth, "Truth CSV")->required();
  eval->add_option("--peaks", eopt.peaks, "Peaks CSV from detect; match spikes to truth by time");
  eval->add_option("--tolerance", eopt.tolerance, "Peak matching tolerance in samples")->check(CLI::NonNegativeNumber);
  eval->add_option("--fs", eopt.fs, "Sample rate for ISI histograms")->check(CLI::PositiveNumber);
  eval->add_option("--out", eopt.out, "Output prefix")->required();

  FeaturesOpts fopt;
  auto* feat = app.add_subcommand("features", "Project labelled spikes for plotting");
  feat->add_option("--input", fopt.input, "Spike matrix (.spkm)")->required();
  feat->add_option("--labels", fopt.labels, "Labels CSV")->required();
  feat->add_option("--d", fopt.d, "Projection dimension")->check(CLI::PositiveNumber);
  feat->add_option("--out", fopt.out, "Output prefix")->required();

  SweepOpts wopt;
  auto* sweep = app.add_subcommand("sweep", "Accuracy table over noise levels and seeds");
  sweep->add_option("--modes", wopt.modes, "Template families")->check(CLI::IsMember({"hard", "easy"}))->delimiter(',');
  sweep->add_option("--sigmas", wopt.sigmas, "Noise levels")->check(CLI::NonNegativeNumber)->delimiter(',');
  sweep->add_option("--seeds", wopt.seeds, "Seeds per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--templates", wopt.templates, "Neurons per recording")->check(CLI::Range(1, 5));
  sweep->add_option("--duration", wopt.duration, "Recording length in seconds")->check(CLI::PositiveNumber);
  sweep->add_option("--out", wopt.out, "Output prefix")->required();
  add_seed(sweep);

  std::string manifest;
  auto* rr = app.add_subcommand("rerun", "Repeat the command recorded in a manifest");
  rr->add_option("--manifest", manifest, "Manifest JSON")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);

    CLI::App* sub = app.get_subcommands().front();
    Run run;
    run.command = sub->get_name();
    run.argv = canonical_argv(args);
    if (auto it = seed_opts.find(run.command); it != seed_opts.end()) {
      run.uses_seed = true;
      if (it->second->count() == 0) {
        seed = seed_from_env();
        run.argv.push_back("--seed");
        run.argv.push_back(std::to_string(seed));
      }
      run.seed = seed;
    }

    std::string prefix;
    if (sub == synth) {
      cmd_synth(so, run, out);
      prefix = so.out;
    } else if (sub == detect) {
      cmd_detect(dopt, run, out);
      prefix = dopt.out;
    } else if (sub == sort) {
      cmd_sort(sopt, run, out);
      prefix = sopt.out;
    } else if (sub == eval) {
      cmd_eval(eopt, run, out);
      prefix = eopt.out;
    } else if (sub == feat) {
      cmd_features(fopt, run, out);
      prefix = fopt.out;
    } else if (sub == sweep) {
      cmd_sweep(wopt, run, out);
      prefix = wopt.out;
    } else {
      if (depth > 0) fail(ErrorKind::DataFormat, "nested rerun");
      return rerun(manifest, out, err, depth);
    }
    write_manifest(run, prefix, out);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, 0);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace spikesub::cli
