#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tep/rng.hpp"
#include "tep/types.hpp"

// Synthetic raw TMS-EEG datasets with a controllable class effect. Output
// bytes are a pure function of the spec: every stochastic ingredient draws
// from a fixed-order substream, and subjects use independent streams derived
// from the master seed, so generation parallelizes without changing results.

namespace tep::synth {

// One evoked component: a Gaussian bump at latency_ms whose polarity
// alternates with its position in the table (+, -, +, -, ...).
struct SynthComponent {
  double latency_ms;
  double width_ms;
  double base_amplitude;         // microvolts before topography weighting
  std::uint64_t topography_seed; // fixes the per-channel gain pattern
};

struct SynthEffect {
  int target_component = 2;      // the P3-window component by default
  double amplitude_shift = 0.0;  // added to the AD class's target amplitude
  double latency_shift_ms = 0.0;
};

struct SynthNoise {
  double pink_scale = 8.0;    // per-channel 1/f background, microvolts std
  double white_scale = 3.0;   // per-channel sensor noise, microvolts std
  double shared_scale = 5.0;  // rank-3 spatially shared background, microvolts std
};

struct SynthArtifact {
  double amplitude = 2000.0;  // pulse transient peak, microvolts
  double duration_ms = 8.0;
  double tau_ms = 2.0;        // exponential decay constant
};

struct SynthSpec {
  int n_ad = 17;
  int n_hc = 17;
  int n_trials = 120;
  int n_channels = 62;
  double fs_hz = 5000.0;
  double isi_lo_s = 2.0;
  double isi_hi_s = 4.0;
  double amp_jitter = 0.1;         // per-subject relative amplitude jitter
  double latency_jitter_ms = 3.0;  // per-subject latency jitter, std
  std::vector<SynthComponent> components = default_components();
  SynthEffect effect;
  SynthNoise noise;
  SynthArtifact artifact;
  std::uint64_t master_seed = 0;

  static std::vector<SynthComponent> default_components();
  void validate() const;
};

// Channel labels used by generated recordings: the canonical cap list,
// truncated or extended to n_channels.
std::vector<ChannelLabel> synth_channel_labels(int n_channels);

// Applies per-subject jitter to a component table (one amplitude and one
// latency draw per component, in table order).
std::vector<SynthComponent> jitter_components(const std::vector<SynthComponent>& table,
                                              Rng& rng, double amp_jitter,
                                              double latency_jitter_ms);

// Unit-topography evoked waveform over [0, post_ms) at fs: the signed sum
// of the table's Gaussian components.
std::vector<double> render_components(const std::vector<SynthComponent>& table,
                                      double fs_hz, double post_ms);

// jitter_components + render_components
std::vector<double> tep_template(const std::vector<SynthComponent>& table, double fs_hz,
                                 Rng& jitter_rng, double amp_jitter,
                                 double latency_jitter_ms, double post_ms = 1000.0);

// Unit-variance 1/f noise by spectral synthesis with seeded phases.
std::vector<double> pink_noise(std::size_t n, Rng& rng);

// One subject's continuous recording (subject streams derive from
// master_seed and subject_index). Subjects [0, n_ad) carry the AD effect.
RawRecording generate_subject(const SynthSpec& spec, int subject_index);

// manifest.json plus one "TEPR" file per subject under out_dir.
Manifest generate_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir,
                          int n_threads = 1);

}  // namespace tep::synth
