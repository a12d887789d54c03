#include "tep/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace tep::features {

namespace {

double population_var(std::span<const double> x, double* mean_out = nullptr) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (const double v : x) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0;
  for (const double v : x) m2 += (v - mean) * (v - mean);
  m2 /= static_cast<double>(n);
  if (mean_out) *mean_out = mean;
  return m2;
}

std::vector<double> first_difference(std::span<const double> x) {
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

}  // namespace

void PeakWindows::validate() const {
  const double bounds[8] = {p1_lo, p1_hi, p2_lo, p2_hi, p3_lo, p3_hi, p4_lo, p4_hi};
  for (int i = 0; i + 1 < 8; ++i)
    if (bounds[i] >= bounds[i + 1])
      throw std::runtime_error("peak windows must be increasing and non-overlapping");
  if (p1_lo < 0.0) throw std::runtime_error("peak windows must be post-pulse");
}

void normalize_trial(std::span<double> trial, std::size_t n_channels,
                     std::size_t n_samples, std::size_t t0_index,
                     const std::string& trial_name) {
  if (trial.size() != n_channels * n_samples)
    throw std::runtime_error("normalize: shape mismatch");
  if (t0_index == 0 || t0_index >= n_samples)
    throw std::runtime_error("normalize: empty baseline window");
  for (std::size_t c = 0; c < n_channels; ++c) {
    double* row = trial.data() + c * n_samples;
    double baseline = 0.0;
    for (std::size_t i = 0; i < t0_index; ++i) baseline += row[i];
    baseline /= static_cast<double>(t0_index);
    for (std::size_t i = 0; i < n_samples; ++i) row[i] -= baseline;
  }
  const double var = population_var(trial);
  if (var <= 0.0)
    throw std::runtime_error("normalize: zero variance in trial " + trial_name +
                             " (flat trial)");
  const double inv_std = 1.0 / std::sqrt(var);
  for (double& v : trial) v *= inv_std;
}

DescriptiveStats descriptive_stats(std::span<const double> x) {
  if (x.size() < 2) throw std::runtime_error("descriptive stats need >= 2 samples");
  DescriptiveStats s{};
  s.max = *std::max_element(x.begin(), x.end());
  s.min = *std::min_element(x.begin(), x.end());
  double mean = 0.0;
  for (const double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  s.mean = mean;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const auto n = static_cast<double>(x.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 < 1e-12) {
    s.skew = 0.0;
    s.kurtosis = 0.0;
  } else {
    s.skew = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

HjorthParams hjorth(std::span<const double> x) {
  if (x.size() < 3) throw std::runtime_error("hjorth needs >= 3 samples");
  HjorthParams h;
  const double var_x = population_var(x);
  h.activity = var_x;
  if (var_x <= 0.0) return {0.0, 0.0, 0.0, true};
  const std::vector<double> d = first_difference(x);
  const double var_d = population_var(d);
  if (var_d <= 0.0) return {0.0, 0.0, 0.0, true};
  h.mobility = std::sqrt(var_d / var_x);
  const std::vector<double> dd = first_difference(d);
  const double var_dd = population_var(dd);
  if (var_dd <= 0.0) return {0.0, 0.0, 0.0, true};
  h.complexity = std::sqrt(var_dd / var_d) / h.mobility;
  return h;
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (const double v : x) e += v * v;
  return e;
}

PeakAmplitudes peak_amplitudes(std::span<const double> x, double fs_hz,
                               const PeakWindows& windows) {
  windows.validate();
  const auto peak_in = [&](double lo_ms, double hi_ms) {
    // inclusive sample bounds; epsilons absorb representation error in
    // ms -> sample conversion
    const auto lo = static_cast<long long>(std::ceil(lo_ms * fs_hz / 1000.0 - 1e-9));
    const auto hi = static_cast<long long>(std::floor(hi_ms * fs_hz / 1000.0 + 1e-9));
    if (lo < 0 || hi >= static_cast<long long>(x.size()) || lo > hi)
      throw std::runtime_error("peak window outside the post-pulse series");
    double peak = 0.0;
    for (long long i = lo; i <= hi; ++i) peak = std::max(peak, std::abs(x[i]));
    return peak;
  };
  return {peak_in(windows.p1_lo, windows.p1_hi), peak_in(windows.p2_lo, windows.p2_hi),
          peak_in(windows.p3_lo, windows.p3_hi), peak_in(windows.p4_lo, windows.p4_hi)};
}

std::vector<double> gmfp(std::span<const double> data, std::size_t n_channels,
                         std::size_t n_samples) {
  if (n_channels < 2) throw std::runtime_error("gmfp requires at least 2 channels");
  if (data.size() != n_channels * n_samples)
    throw std::runtime_error("gmfp: shape mismatch");
  std::vector<double> out(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n_channels; ++c) mean += data[c * n_samples + i];
    mean /= static_cast<double>(n_channels);
    double ss = 0.0;
    for (std::size_t c = 0; c < n_channels; ++c) {
      const double d = data[c * n_samples + i] - mean;
      ss += d * d;
    }
    out[i] = std::sqrt(ss / static_cast<double>(n_channels));
  }
  return out;
}

double auc(std::span<const double> series, double fs_hz) {
  if (series.size() < 2) throw std::runtime_error("auc needs >= 2 samples");
  double sum = 0.5 * (series.front() + series.back());
  for (std::size_t i = 1; i + 1 < series.size(); ++i) sum += series[i];
  return sum / fs_hz;
}

SubjectVector subject_feature_vector(const EpochSet& epochs, const montage::Montage& m,
                                     const PeakWindows& windows) {
  epochs.validate();
  windows.validate();
  if (epochs.n_trials == 0)
    throw std::runtime_error("feature extraction needs at least one trial");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < epochs.channels.size(); ++c) index[epochs.channels[c]] = c;
  std::vector<std::size_t> picks;
  picks.reserve(m.labels.size());
  for (const auto& label : m.labels) {
    const auto it = index.find(label);
    if (it == index.end())
      throw std::runtime_error("montage \"" + m.name + "\": channel \"" + label +
                               "\" not present in the epochs");
    picks.push_back(it->second);
  }

  const std::size_t n_ch = epochs.n_channels();
  const std::size_t n_sm = epochs.n_samples;
  const std::size_t post_len = n_sm - epochs.t0_index;
  const std::size_t n_montage = picks.size();

  SubjectVector result;
  std::array<double, kNumFeatures> totals{};
  std::vector<double> trial(n_ch * n_sm);
  std::vector<double> post_montage(n_montage * post_len);

  for (std::size_t t = 0; t < epochs.n_trials; ++t) {
    const float* src = epochs.trial_channel(t, 0);
    for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = src[i];
    normalize_trial(trial, n_ch, n_sm, epochs.t0_index, std::to_string(t));

    std::array<double, 13> channel_sums{};
    for (std::size_t j = 0; j < n_montage; ++j) {
      const double* row = trial.data() + picks[j] * n_sm + epochs.t0_index;
      const std::span<const double> post(row, post_len);
      const DescriptiveStats ds = descriptive_stats(post);
      const HjorthParams hp = hjorth(post);
      if (hp.degenerate) ++result.degenerate_channels;
      const double en = energy(post);
      const PeakAmplitudes pk = peak_amplitudes(post, epochs.fs_hz, windows);
      const double vals[13] = {ds.max, ds.min,      ds.mean,       ds.skew, ds.kurtosis,
                               hp.activity, hp.mobility, hp.complexity, en,
                               pk.p1,   pk.p2,       pk.p3,         pk.p4};
      for (int f = 0; f < 13; ++f) channel_sums[f] += vals[f];
      std::copy(row, row + post_len,
                post_montage.begin() + static_cast<std::ptrdiff_t>(j * post_len));
    }
    for (int f = 0; f < 13; ++f)
      totals[f] += channel_sums[f] / static_cast<double>(n_montage);

    // single-channel montages have an identically-zero field spread
    if (n_montage >= 2) {
      const std::vector<double> g = gmfp(post_montage, n_montage, post_len);
      totals[13] += auc(g, epochs.fs_hz);
    }
  }
  for (std::size_t f = 0; f < kNumFeatures; ++f)
    result.values[f] = totals[f] / static_cast<double>(epochs.n_trials);
  return result;
}

}  // namespace tep::features
