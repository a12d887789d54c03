#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Core domain types shared by all pipeline stages. Everything here is a
// plain value type, immutable by convention once constructed, so instances
// can be shared freely across worker threads.

namespace tep {

using ChannelLabel = std::string;

enum class Label : int { HC = 0, AD = 1 };

inline const char* to_string(Label l) { return l == Label::AD ? "AD" : "HC"; }

inline Label label_from_string(const std::string& s) {
  if (s == "AD") return Label::AD;
  if (s == "HC") return Label::HC;
  throw std::runtime_error("unknown label \"" + s + "\" (expected AD or HC)");
}

// Continuous multichannel recording. data is channel-major: channel c spans
// [c * n_samples, (c + 1) * n_samples). Samples are microvolts.
struct RawRecording {
  std::vector<ChannelLabel> channels;
  double fs_hz = 0.0;
  std::size_t n_samples = 0;
  std::vector<float> data;
  std::vector<std::uint64_t> pulse_samples;  // strictly increasing, < n_samples

  std::size_t n_channels() const { return channels.size(); }
  const float* channel(std::size_t c) const { return data.data() + c * n_samples; }
  float* channel(std::size_t c) { return data.data() + c * n_samples; }

  void validate() const;
};

// Pulse-locked epochs: trials x channels x samples, trial-major then
// channel-major. Sample i within an epoch sits at time (i - t0_index) / fs_hz.
struct EpochSet {
  std::vector<ChannelLabel> channels;
  double fs_hz = 0.0;
  std::size_t t0_index = 0;
  std::size_t n_trials = 0;
  std::size_t n_samples = 0;
  std::vector<float> data;

  std::size_t n_channels() const { return channels.size(); }
  const float* trial_channel(std::size_t t, std::size_t c) const {
    return data.data() + (t * channels.size() + c) * n_samples;
  }
  float* trial_channel(std::size_t t, std::size_t c) {
    return data.data() + (t * channels.size() + c) * n_samples;
  }

  void validate() const;
};

struct SubjectRecord {
  std::string id;
  Label label = Label::HC;
  std::string path;
};

struct Manifest {
  double fs_hz = 0.0;
  std::vector<ChannelLabel> channel_labels;
  std::vector<SubjectRecord> subjects;
};

// The 14 per-subject features, fixed key order.
inline constexpr std::size_t kNumFeatures = 14;
inline constexpr std::array<const char*, kNumFeatures> kFeatureKeys = {
    "max",       "min",    "mean",   "skew", "kurtosis", "activity", "mobility",
    "complexity", "energy", "p1",     "p2",   "p3",       "p4",       "auc_gmfp"};

struct SubjectFeatures {
  std::string id;
  Label label = Label::HC;
  std::array<double, kNumFeatures> values{};
};

struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::uint64_t total() const { return tp + tn + fp + fn; }
};

struct Metrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::vector<std::string> flags;  // names of metrics zeroed by a 0/0 denominator
};

struct RunResult {
  int run_index = 0;
  std::uint64_t seed = 0;
  ConfusionCounts counts;
  Metrics metrics;
};

struct EvaluationReport {
  std::string config_json;  // fully resolved run configuration, serialized JSON
  std::vector<RunResult> runs;
  Metrics averaged;
};

}  // namespace tep
