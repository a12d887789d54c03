#include "tep/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "tep/parallel.hpp"

namespace tep::preprocess {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::size_t ms_to_samples(double ms, double fs_hz) {
  return static_cast<std::size_t>(std::llround(ms * fs_hz / 1000.0));
}

}  // namespace

void PreprocessConfig::validate(double fs_hz) const {
  if (fs_hz <= 0.0) throw std::runtime_error("fs_hz must be positive");
  if (pre_ms <= 0.0 || post_ms <= 0.0)
    throw std::runtime_error("pre_ms and post_ms must be positive");
  if (excise_lo_ms > 0.0 || excise_hi_ms < 0.0)
    throw std::runtime_error("excision window must contain t=0");
  if (band_lo_hz <= 0.0 || band_lo_hz >= band_hi_hz)
    throw std::runtime_error("band edges must satisfy 0 < low < high");
  if (filter_order < 1) throw std::runtime_error("filter_order must be >= 1");
  if (decim_factor < 1) throw std::runtime_error("decim_factor must be >= 1");
  if (band_hi_hz >= fs_hz / (2.0 * decim_factor))
    throw std::runtime_error("band high edge must stay below the post-decimation Nyquist");
}

SegmentResult segment(const RawRecording& raw, const PreprocessConfig& cfg) {
  raw.validate();
  cfg.validate(raw.fs_hz);
  const std::size_t epoch_len = ms_to_samples(cfg.pre_ms + cfg.post_ms, raw.fs_hz);
  const std::size_t t0 = ms_to_samples(cfg.pre_ms, raw.fs_hz);
  const std::size_t n_ch = raw.n_channels();

  std::vector<std::uint64_t> usable;
  std::size_t dropped = 0;
  for (const auto p : raw.pulse_samples) {
    if (p >= t0 && p - t0 + epoch_len <= raw.n_samples)
      usable.push_back(p);
    else
      ++dropped;
  }
  if (usable.empty()) throw std::runtime_error("segment: zero usable pulses");

  SegmentResult result;
  result.dropped = dropped;
  auto& e = result.epochs;
  e.channels = raw.channels;
  e.fs_hz = raw.fs_hz;
  e.t0_index = t0;
  e.n_trials = usable.size();
  e.n_samples = epoch_len;
  e.data.resize(e.n_trials * n_ch * epoch_len);
  for (std::size_t t = 0; t < usable.size(); ++t) {
    const std::size_t start = static_cast<std::size_t>(usable[t]) - t0;
    for (std::size_t c = 0; c < n_ch; ++c) {
      const float* src = raw.channel(c) + start;
      std::copy(src, src + epoch_len, e.trial_channel(t, c));
    }
  }
  return result;
}

std::vector<double> excise_interpolate(std::vector<double> x, std::size_t t0_index,
                                       double fs_hz, double lo_ms, double hi_ms) {
  const auto lo_off = std::llround(lo_ms * fs_hz / 1000.0);
  const auto hi_off = std::llround(hi_ms * fs_hz / 1000.0);
  const auto lo = static_cast<long long>(t0_index) + lo_off;
  const auto hi = static_cast<long long>(t0_index) + hi_off;
  if (lo > hi) throw std::runtime_error("excision window is empty");
  if (lo < 2 || hi + 2 >= static_cast<long long>(x.size()))
    throw std::runtime_error("excision window touches epoch edge");

  // cubic through the two anchor samples on each side (Lagrange form)
  const double ax[4] = {static_cast<double>(lo - 2), static_cast<double>(lo - 1),
                        static_cast<double>(hi + 1), static_cast<double>(hi + 2)};
  const double ay[4] = {x[lo - 2], x[lo - 1], x[hi + 1], x[hi + 2]};
  for (long long i = lo; i <= hi; ++i) {
    const double t = static_cast<double>(i);
    double v = 0.0;
    for (int j = 0; j < 4; ++j) {
      double basis = 1.0;
      for (int m = 0; m < 4; ++m) {
        if (m == j) continue;
        basis *= (t - ax[m]) / (ax[j] - ax[m]);
      }
      v += ay[j] * basis;
    }
    x[i] = v;
  }
  return x;
}

SosFilter design_butterworth_bandpass(double lo_hz, double hi_hz, double fs_hz, int order) {
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs_hz / 2.0))
    throw std::runtime_error("band edges must satisfy 0 < low < high < fs/2");
  if (order < 1) throw std::runtime_error("filter order must be >= 1");

  using cd = std::complex<double>;
  const double fs2 = 2.0 * fs_hz;
  const double w1 = fs2 * std::tan(kPi * lo_hz / fs_hz);
  const double w2 = fs2 * std::tan(kPi * hi_hz / fs_hz);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // analog prototype poles -> band-pass poles -> bilinear transform
  std::vector<cd> zpoles;
  zpoles.reserve(2 * static_cast<std::size_t>(order));
  cd denom_prod = 1.0;  // prod(fs2 - s_pole), for the bilinear gain
  for (int k = 0; k < order; ++k) {
    const double theta = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
    const cd proto(std::cos(theta), std::sin(theta));
    const cd half = proto * (bw / 2.0);
    const cd disc = std::sqrt(half * half - w0sq);
    for (const cd s : {half + disc, half - disc}) {
      denom_prod *= (fs2 - s);
      zpoles.push_back((fs2 + s) / (fs2 - s));
    }
  }
  // n analog zeros at s=0 map to z=+1; n zeros at infinity map to z=-1
  const double gain =
      std::pow(bw * fs2, order) / denom_prod.real();

  // pair poles into real quadratics: conjugate pairs, plus real poles sorted
  // and paired in order
  std::vector<cd> complex_reps;
  std::vector<double> real_poles;
  for (const cd& p : zpoles) {
    if (std::abs(p.imag()) < 1e-10 * (1.0 + std::abs(p.real())))
      real_poles.push_back(p.real());
    else if (p.imag() > 0.0)
      complex_reps.push_back(p);
  }
  std::sort(real_poles.begin(), real_poles.end());
  if (real_poles.size() % 2 != 0)
    throw std::runtime_error("internal filter design error: unpaired real pole");

  struct Pair {
    double a1, a2, radius;
  };
  std::vector<Pair> pairs;
  for (const cd& p : complex_reps)
    pairs.push_back({-2.0 * p.real(), std::norm(p), std::abs(p)});
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double r1 = real_poles[i], r2 = real_poles[i + 1];
    pairs.push_back({-(r1 + r2), r1 * r2, std::max(std::abs(r1), std::abs(r2))});
  }
  // poles closest to the unit circle go last
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return a.radius < b.radius; });

  SosFilter f;
  f.sections.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double g = (i == 0) ? gain : 1.0;
    // numerator (z - 1)(z + 1) = z^2 - 1 per section
    f.sections.push_back({g, 0.0, -g, pairs[i].a1, pairs[i].a2});
  }
  return f;
}

namespace {

// transposed direct-form II, one pass; zi holds the two state values per
// section, pre-scaled for a step of height x[0]
std::vector<double> sosfilt(const SosFilter& f, std::vector<double> x) {
  double step = x.empty() ? 0.0 : x.front();
  for (const Biquad& s : f.sections) {
    const double denom = 1.0 + s.a1 + s.a2;
    const double h_dc = denom != 0.0 ? (s.b0 + s.b1 + s.b2) / denom : 0.0;
    double s1 = (h_dc - s.b0) * step;
    double s2 = (s.b2 - s.a2 * h_dc) * step;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
    step *= h_dc;  // the next section sees this section's steady state
  }
  return x;
}

}  // namespace

std::vector<double> filtfilt(const SosFilter& f, const std::vector<double>& x, int pad_len) {
  const std::size_t n = x.size();
  const auto pad = static_cast<std::size_t>(pad_len);
  if (pad_len < 0) throw std::runtime_error("pad length must be non-negative");
  if (n <= pad) throw std::runtime_error("series too short for filter padding");

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  ext = sosfilt(f, std::move(ext));
  std::reverse(ext.begin(), ext.end());
  ext = sosfilt(f, std::move(ext));
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> bandpass_zero_phase(const std::vector<double>& x, double fs_hz,
                                        double lo_hz, double hi_hz, int order) {
  const SosFilter f = design_butterworth_bandpass(lo_hz, hi_hz, fs_hz, order);
  return filtfilt(f, x, 3 * (2 * order + 1));
}

std::vector<double> decimate(const std::vector<double>& x, int factor) {
  if (factor < 1) throw std::runtime_error("decimation factor must be >= 1");
  if (factor == 1) return x;
  std::vector<double> out;
  out.reserve((x.size() + factor - 1) / factor);
  for (std::size_t i = 0; i < x.size(); i += static_cast<std::size_t>(factor))
    out.push_back(x[i]);
  return out;
}

void average_reference(std::span<double> data, std::size_t n_channels,
                       std::size_t n_samples) {
  if (n_channels < 2)
    throw std::runtime_error("average reference requires at least 2 channels");
  if (data.size() != n_channels * n_samples)
    throw std::runtime_error("average reference: shape mismatch");
  for (std::size_t i = 0; i < n_samples; ++i) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n_channels; ++c) mean += data[c * n_samples + i];
    mean /= static_cast<double>(n_channels);
    for (std::size_t c = 0; c < n_channels; ++c) data[c * n_samples + i] -= mean;
  }
}

PipelineResult preprocess_pipeline(const RawRecording& raw, const PreprocessConfig& cfg,
                                   int n_threads) {
  SegmentResult seg = segment(raw, cfg);
  const EpochSet& in = seg.epochs;
  const std::size_t n_ch = in.n_channels();
  const SosFilter filter =
      design_butterworth_bandpass(cfg.band_lo_hz, cfg.band_hi_hz, in.fs_hz, cfg.filter_order);
  const int pad_len = 3 * (2 * cfg.filter_order + 1);
  const auto factor = static_cast<std::size_t>(cfg.decim_factor);

  PipelineResult result;
  result.dropped = seg.dropped;
  auto& out = result.epochs;
  out.channels = in.channels;
  out.fs_hz = in.fs_hz / cfg.decim_factor;
  out.t0_index = in.t0_index / factor;
  out.n_trials = in.n_trials;
  out.n_samples = (in.n_samples + factor - 1) / factor;
  out.data.resize(out.n_trials * n_ch * out.n_samples);

  parallel_for(in.n_trials, n_threads, [&](std::size_t t) {
    std::vector<double> trial(n_ch * out.n_samples);
    for (std::size_t c = 0; c < n_ch; ++c) {
      const float* src = in.trial_channel(t, c);
      std::vector<double> x(src, src + in.n_samples);
      x = excise_interpolate(std::move(x), in.t0_index, in.fs_hz, cfg.excise_lo_ms,
                             cfg.excise_hi_ms);
      x = filtfilt(filter, x, pad_len);
      x = decimate(x, cfg.decim_factor);
      std::copy(x.begin(), x.end(), trial.begin() + static_cast<std::ptrdiff_t>(c * out.n_samples));
    }
    average_reference(trial, n_ch, out.n_samples);
    float* dst = out.trial_channel(t, 0);
    for (std::size_t i = 0; i < trial.size(); ++i) dst[i] = static_cast<float>(trial[i]);
  });
  return result;
}

}  // namespace tep::preprocess
