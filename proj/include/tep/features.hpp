#pragma once

#include <span>
#include <vector>

#include "tep/montage.hpp"
#include "tep/types.hpp"

// Per-trial time-domain features and their reduction to one 14-vector per
// subject. All moment estimators are population (biased) ones, and the
// channel/trial averages use a fixed sequential summation order, so results
// are bit-reproducible.

namespace tep::features {

// Post-pulse peak search windows, ms, inclusive bounds.
struct PeakWindows {
  double p1_lo = 25.0, p1_hi = 40.0;
  double p2_lo = 45.0, p2_hi = 80.0;
  double p3_lo = 85.0, p3_hi = 150.0;
  double p4_lo = 160.0, p4_hi = 250.0;

  void validate() const;
};

// Per channel: subtract that channel's pre-pulse (baseline) mean; then scale
// every sample of every channel by one trial-global standard deviation.
// trial is a channels x samples row-major matrix. trial_name is used in the
// zero-variance error message.
void normalize_trial(std::span<double> trial, std::size_t n_channels,
                     std::size_t n_samples, std::size_t t0_index,
                     const std::string& trial_name);

struct DescriptiveStats {
  double max, min, mean, skew, kurtosis;
};

// skew = m3/m2^1.5, kurtosis = m4/m2^2 - 3; both 0 when m2 < 1e-12
DescriptiveStats descriptive_stats(std::span<const double> x);

struct HjorthParams {
  double activity = 0.0;    // population variance
  double mobility = 0.0;    // sqrt(var(diff)/var(x))
  double complexity = 0.0;  // mobility(diff)/mobility(x)
  bool degenerate = false;  // zero variance somewhere in the chain
};

HjorthParams hjorth(std::span<const double> x);

// sum of squared samples
double energy(std::span<const double> x);

struct PeakAmplitudes {
  double p1, p2, p3, p4;
};

// x is the post-pulse series (x[0] at t = 0); peaks are max |x| inside each
// window, polarity independent.
PeakAmplitudes peak_amplitudes(std::span<const double> x, double fs_hz,
                               const PeakWindows& windows);

// Instantaneous cross-channel standard deviation. data is a channels x
// samples row-major matrix; requires >= 2 channels.
std::vector<double> gmfp(std::span<const double> data, std::size_t n_channels,
                         std::size_t n_samples);

// trapezoidal integral, dt = 1/fs
double auc(std::span<const double> series, double fs_hz);

struct SubjectVector {
  std::array<double, kNumFeatures> values{};
  std::size_t degenerate_channels = 0;  // trial-channels with zero-variance Hjorth
};

// Per trial: normalize over the full channel set, restrict to the montage,
// compute the 13 per-channel features on the post-pulse window plus the
// AUC of the montage GMFP; average channels first, then trials.
SubjectVector subject_feature_vector(const EpochSet& epochs, const montage::Montage& m,
                                     const PeakWindows& windows = {});

}  // namespace tep::features
