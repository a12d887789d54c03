#pragma once

#include <span>
#include <vector>

#include "tep/types.hpp"

// Pulse-locked preprocessing chain: segmentation, pulse-window excision with
// cubic interpolation, zero-phase Butterworth band-pass, decimation and
// average reference. Everything in this module is deterministic; trials are
// independent, so the pipeline may process them in parallel without changing
// a single output bit.

namespace tep::preprocess {

struct PreprocessConfig {
  double pre_ms = 500.0;     // epoch extent before the pulse
  double post_ms = 1000.0;   // epoch extent after the pulse
  double excise_lo_ms = -2.0;
  double excise_hi_ms = 10.0;
  double band_lo_hz = 1.0;
  double band_hi_hz = 80.0;
  int filter_order = 3;      // prototype order; forward-backward doubles it
  int decim_factor = 5;

  void validate(double fs_hz) const;
};

struct SegmentResult {
  EpochSet epochs;
  std::size_t dropped = 0;  // pulses without a full pre/post window
};

// Cuts one epoch per pulse: llround(fs*(pre+post)/1000) samples with the
// pulse at t0_index = llround(fs*pre/1000). Pulses too close to either end
// of the recording are dropped and counted.
SegmentResult segment(const RawRecording& raw, const PreprocessConfig& cfg);

// Replaces samples in [t0+lo_ms, t0+hi_ms] (inclusive, ms relative to the
// pulse) with the cubic polynomial through the two anchor samples on each
// side of the window. Anchors are preserved exactly.
std::vector<double> excise_interpolate(std::vector<double> x, std::size_t t0_index,
                                       double fs_hz, double lo_ms, double hi_ms);

// One second-order filter section; the design folds the overall gain into
// the first section's numerator.
struct Biquad {
  double b0, b1, b2;  // numerator
  double a1, a2;      // denominator (a0 normalized to 1)
};

struct SosFilter {
  std::vector<Biquad> sections;
};

// Digital Butterworth band-pass of prototype order `order` (transfer order
// 2*order), bilinear transform with prewarped edges, factored into
// second-order sections.
SosFilter design_butterworth_bandpass(double lo_hz, double hi_hz, double fs_hz, int order);

// Forward-backward application of f with odd-reflection padding of pad_len
// samples on each end (trimmed afterwards). Output length equals input
// length. Requires x.size() > pad_len.
std::vector<double> filtfilt(const SosFilter& f, const std::vector<double>& x, int pad_len);

// pad length fixed at 3*(2*order+1)
std::vector<double> bandpass_zero_phase(const std::vector<double>& x, double fs_hz,
                                        double lo_hz, double hi_hz, int order);

// Keeps indices 0, factor, 2*factor, ...
std::vector<double> decimate(const std::vector<double>& x, int factor);

// Subtracts the instantaneous cross-channel mean at every sample. data is a
// channels x samples row-major matrix. Requires >= 2 channels.
void average_reference(std::span<double> data, std::size_t n_channels,
                       std::size_t n_samples);

struct PipelineResult {
  EpochSet epochs;
  std::size_t dropped = 0;
};

// segment -> excise/interpolate -> band-pass -> decimate -> average reference
PipelineResult preprocess_pipeline(const RawRecording& raw, const PreprocessConfig& cfg,
                                   int n_threads = 1);

}  // namespace tep::preprocess
