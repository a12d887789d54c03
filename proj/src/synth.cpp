#include "tep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "tep/io.hpp"
#include "tep/montage.hpp"
#include "tep/parallel.hpp"

namespace tep::synth {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLeadSeconds = 0.7;   // margin before the first pulse
constexpr double kTailSeconds = 1.2;   // margin after the last pulse
constexpr double kPostMsDefault = 1000.0;

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& v : a) v /= static_cast<double>(n);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 8;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace

std::vector<SynthComponent> SynthSpec::default_components() {
  // latencies sit inside the four post-pulse peak search windows
  return {{30.0, 5.0, 6.0, 101}, {60.0, 8.0, 5.0, 102},
          {110.0, 15.0, 4.0, 103}, {200.0, 25.0, 3.0, 104}};
}

void SynthSpec::validate() const {
  if (n_ad < 1 || n_hc < 1) throw std::runtime_error("subject counts must be positive");
  if (n_trials < 1) throw std::runtime_error("n_trials must be positive");
  if (n_channels < 2) throw std::runtime_error("n_channels must be >= 2");
  if (fs_hz <= 0.0) throw std::runtime_error("fs_hz must be positive");
  if (!(isi_lo_s > 0.0 && isi_lo_s <= isi_hi_s))
    throw std::runtime_error("ISI range must satisfy 0 < lo <= hi");
  if (amp_jitter < 0.0 || latency_jitter_ms < 0.0)
    throw std::runtime_error("jitter scales must be >= 0");
  if (components.empty() && effect.amplitude_shift != 0.0)
    throw std::runtime_error("effect needs a component table");
  for (const auto& c : components) {
    if (!(c.latency_ms > 0.0 && c.latency_ms < 1000.0))
      throw std::runtime_error("component latencies must lie in (0, 1000) ms");
    if (c.width_ms <= 0.0) throw std::runtime_error("component widths must be positive");
  }
  if (noise.pink_scale < 0.0 || noise.white_scale < 0.0 || noise.shared_scale < 0.0)
    throw std::runtime_error("noise scales must be >= 0");
  if (!components.empty() &&
      (effect.target_component < 0 ||
       effect.target_component >= static_cast<int>(components.size())))
    throw std::runtime_error("effect target component out of range");
  if (artifact.duration_ms < 0.0 || artifact.tau_ms <= 0.0)
    throw std::runtime_error("artifact window must be valid");
}

std::vector<ChannelLabel> synth_channel_labels(int n_channels) {
  const auto& canonical = montage::canonical_channels();
  std::vector<ChannelLabel> labels;
  labels.reserve(static_cast<std::size_t>(n_channels));
  for (int c = 0; c < n_channels; ++c) {
    if (c < static_cast<int>(canonical.size()))
      labels.push_back(canonical[static_cast<std::size_t>(c)]);
    else
      labels.push_back("EXT" + std::to_string(c - static_cast<int>(canonical.size()) + 1));
  }
  return labels;
}

std::vector<SynthComponent> jitter_components(const std::vector<SynthComponent>& table,
                                              Rng& rng, double amp_jitter,
                                              double latency_jitter_ms) {
  std::vector<SynthComponent> out = table;
  for (auto& c : out) c.base_amplitude *= 1.0 + amp_jitter * rng.normal();
  for (auto& c : out) c.latency_ms += latency_jitter_ms * rng.normal();
  return out;
}

std::vector<double> render_components(const std::vector<SynthComponent>& table,
                                      double fs_hz, double post_ms) {
  const auto n = static_cast<std::size_t>(std::llround(post_ms * fs_hz / 1000.0));
  std::vector<double> w(n, 0.0);
  double sign = 1.0;
  for (const auto& c : table) {
    const double denom = 2.0 * c.width_ms * c.width_ms;
    for (std::size_t i = 0; i < n; ++i) {
      const double t_ms = static_cast<double>(i) * 1000.0 / fs_hz;
      const double d = t_ms - c.latency_ms;
      w[i] += sign * c.base_amplitude * std::exp(-d * d / denom);
    }
    sign = -sign;
  }
  return w;
}

std::vector<double> tep_template(const std::vector<SynthComponent>& table, double fs_hz,
                                 Rng& jitter_rng, double amp_jitter,
                                 double latency_jitter_ms, double post_ms) {
  return render_components(
      jitter_components(table, jitter_rng, amp_jitter, latency_jitter_ms), fs_hz, post_ms);
}

std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  const std::size_t m = next_pow2(n);
  std::vector<std::complex<double>> spectrum(m, {0.0, 0.0});
  for (std::size_t k = 1; k < m / 2; ++k) {
    const double mag = 1.0 / std::sqrt(static_cast<double>(k));
    const double phase = kTwoPi * rng.uniform01();
    spectrum[k] = std::polar(mag, phase);
    spectrum[m - k] = std::conj(spectrum[k]);
  }
  spectrum[m / 2] = {(rng.uniform01() < 0.5 ? -1.0 : 1.0) /
                         std::sqrt(static_cast<double>(m / 2)),
                     0.0};
  fft_inplace(spectrum, true);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = spectrum[i].real();
  double mean = 0.0;
  for (const double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  for (double& v : x) v = (v - mean) * inv_std;
  return x;
}

RawRecording generate_subject(const SynthSpec& spec, int subject_index) {
  spec.validate();
  const int n_subjects = spec.n_ad + spec.n_hc;
  if (subject_index < 0 || subject_index >= n_subjects)
    throw std::runtime_error("subject index out of range");
  const bool is_ad = subject_index < spec.n_ad;
  const auto n_ch = static_cast<std::size_t>(spec.n_channels);

  Rng rng(derive_seed(spec.master_seed, static_cast<std::uint64_t>(subject_index)));

  // 1. subject component table: the class effect first, then subject jitter
  std::vector<SynthComponent> table = spec.components;
  if (is_ad && !table.empty()) {
    auto& target = table[static_cast<std::size_t>(spec.effect.target_component)];
    target.base_amplitude += spec.effect.amplitude_shift;
    target.latency_ms += spec.effect.latency_shift_ms;
  }
  table = jitter_components(table, rng, spec.amp_jitter, spec.latency_jitter_ms);

  // 2. pulse train
  std::vector<std::uint64_t> pulses(static_cast<std::size_t>(spec.n_trials));
  pulses[0] = static_cast<std::uint64_t>(std::llround(kLeadSeconds * spec.fs_hz));
  for (std::size_t t = 1; t < pulses.size(); ++t) {
    const double isi = rng.uniform(spec.isi_lo_s, spec.isi_hi_s);
    pulses[t] = pulses[t - 1] + static_cast<std::uint64_t>(std::llround(isi * spec.fs_hz));
  }
  const std::size_t n_total =
      pulses.back() + static_cast<std::size_t>(std::llround(kTailSeconds * spec.fs_hz));

  // 3. channel gains for the pulse artifact, then the rank-3 mixing matrix
  std::vector<double> artifact_gain(n_ch);
  for (auto& g : artifact_gain) g = rng.uniform(0.5, 1.5);
  std::vector<double> mix(n_ch * 3);
  for (auto& g : mix) g = spec.noise.shared_scale * rng.normal() / std::sqrt(3.0);

  // 4. shared background sources
  std::vector<std::vector<double>> shared(3);
  for (auto& s : shared) s = pink_noise(n_total, rng);

  // per-component evoked waveforms and their topography gains
  std::vector<std::vector<double>> component_waves;
  component_waves.reserve(table.size());
  {
    double sign = 1.0;
    for (const auto& c : table) {
      SynthComponent single = c;
      std::vector<SynthComponent> one{single};
      auto w = render_components(one, spec.fs_hz, kPostMsDefault);
      for (auto& v : w) v *= sign;
      sign = -sign;
      component_waves.push_back(std::move(w));
    }
  }
  std::vector<std::vector<double>> topo(table.size());
  for (std::size_t k = 0; k < table.size(); ++k) {
    Rng topo_rng(derive_seed(table[k].topography_seed, 0));
    topo[k].resize(n_ch);
    for (auto& g : topo[k]) g = topo_rng.uniform(0.4, 1.0);
  }

  // pulse artifact shape (0 .. duration_ms, decaying transient)
  const auto artifact_len =
      static_cast<std::size_t>(std::llround(spec.artifact.duration_ms * spec.fs_hz / 1000.0));
  std::vector<double> artifact_wave(artifact_len);
  for (std::size_t i = 0; i < artifact_len; ++i) {
    const double t_ms = static_cast<double>(i) * 1000.0 / spec.fs_hz;
    artifact_wave[i] = spec.artifact.amplitude * std::exp(-t_ms / spec.artifact.tau_ms);
  }

  RawRecording rec;
  rec.channels = synth_channel_labels(spec.n_channels);
  rec.fs_hz = spec.fs_hz;
  rec.n_samples = n_total;
  rec.pulse_samples = pulses;
  rec.data.resize(n_ch * n_total);

  // 5. per-channel assembly: pink + white + shared + evoked + artifact
  std::vector<double> channel(n_total);
  for (std::size_t c = 0; c < n_ch; ++c) {
    const std::vector<double> pink = pink_noise(n_total, rng);
    for (std::size_t i = 0; i < n_total; ++i)
      channel[i] = spec.noise.pink_scale * pink[i] + spec.noise.white_scale * rng.normal();
    for (std::size_t r = 0; r < 3; ++r) {
      const double g = mix[c * 3 + r];
      const auto& s = shared[r];
      for (std::size_t i = 0; i < n_total; ++i) channel[i] += g * s[i];
    }
    for (const auto p : pulses) {
      for (std::size_t k = 0; k < component_waves.size(); ++k) {
        const double g = topo[k][c];
        const auto& w = component_waves[k];
        const std::size_t limit = std::min(w.size(), n_total - p);
        for (std::size_t i = 0; i < limit; ++i) channel[p + i] += g * w[i];
      }
      const std::size_t alimit = std::min(artifact_wave.size(), n_total - p);
      for (std::size_t i = 0; i < alimit; ++i)
        channel[p + i] += artifact_gain[c] * artifact_wave[i];
    }
    float* dst = rec.channel(c);
    for (std::size_t i = 0; i < n_total; ++i) dst[i] = static_cast<float>(channel[i]);
  }
  return rec;
}

Manifest generate_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir,
                          int n_threads) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  const int n_subjects = spec.n_ad + spec.n_hc;
  int width = 2;
  for (int v = 100; v <= n_subjects; v *= 10) ++width;

  Manifest manifest;
  manifest.fs_hz = spec.fs_hz;
  manifest.channel_labels = synth_channel_labels(spec.n_channels);
  manifest.subjects.resize(static_cast<std::size_t>(n_subjects));
  for (int i = 0; i < n_subjects; ++i) {
    std::string num = std::to_string(i + 1);
    num.insert(0, static_cast<std::size_t>(width) - std::min<std::size_t>(num.size(), width),
               '0');
    auto& rec = manifest.subjects[static_cast<std::size_t>(i)];
    rec.id = "s" + num;
    rec.label = i < spec.n_ad ? Label::AD : Label::HC;
    rec.path = (out_dir / (rec.id + ".tepr")).string();
  }

  parallel_for(static_cast<std::size_t>(n_subjects), n_threads, [&](std::size_t i) {
    const RawRecording rec = generate_subject(spec, static_cast<int>(i));
    io::write_recording(rec, manifest.subjects[i].path);
  });

  io::write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace tep::synth
