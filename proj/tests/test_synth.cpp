#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tep/features.hpp"
#include "tep/io.hpp"
#include "tep/montage.hpp"
#include "tep/preprocess.hpp"
#include "tep/synth.hpp"

using namespace tep;
using namespace tep::synth;

namespace {

SynthSpec small_spec() {
  SynthSpec spec;
  spec.n_ad = 2;
  spec.n_hc = 2;
  spec.n_trials = 5;
  spec.n_channels = 4;
  spec.fs_hz = 1000.0;
  spec.master_seed = 7;
  return spec;
}

}  // namespace

TEST_CASE("a single unit component peaks at its latency with unit height") {
  const std::vector<SynthComponent> table = {{100.0, 10.0, 1.0, 5}};
  const auto w = render_components(table, 1000.0, 1000.0);
  REQUIRE(w.size() == 1000);
  const auto peak = std::max_element(w.begin(), w.end());
  CHECK(peak - w.begin() == 100);
  CHECK(*peak == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("component polarity alternates down the table") {
  const std::vector<SynthComponent> table = {{100.0, 5.0, 1.0, 1}, {300.0, 5.0, 1.0, 2}};
  const auto w = render_components(table, 1000.0, 1000.0);
  CHECK(w[100] > 0.9);
  CHECK(w[300] < -0.9);
}

TEST_CASE("an empty component table renders silence") {
  const auto w = render_components({}, 1000.0, 1000.0);
  for (const double v : w) CHECK(v == 0.0);
}

TEST_CASE("zero jitter with the same seed reproduces the waveform") {
  const auto table = SynthSpec::default_components();
  Rng a(5), b(5);
  const auto wa = tep_template(table, 5000.0, a, 0.0, 0.0);
  const auto wb = tep_template(table, 5000.0, b, 0.0, 0.0);
  CHECK(wa == wb);
}

TEST_CASE("a 17+17 spec emits a 34-subject manifest") {
  test::TempDir dir("synth_manifest");
  SynthSpec spec = small_spec();
  spec.n_ad = 17;
  spec.n_hc = 17;
  spec.n_trials = 2;
  spec.n_channels = 2;
  spec.fs_hz = 500.0;
  const Manifest manifest = generate_dataset(spec, dir.path(), 2);
  CHECK(manifest.subjects.size() == 34);
  int n_ad = 0;
  for (const auto& s : manifest.subjects) n_ad += s.label == Label::AD ? 1 : 0;
  CHECK(n_ad == 17);
  const Manifest reread = io::load_manifest(dir.path() / "manifest.json");
  CHECK(reread.subjects.size() == 34);
  CHECK(reread.subjects.front().id == "s01");
}

TEST_CASE("every generated recording carries exactly n_trials pulse markers") {
  SynthSpec spec = small_spec();
  spec.n_trials = 120;
  spec.fs_hz = 500.0;
  spec.n_channels = 2;
  const RawRecording rec = generate_subject(spec, 0);
  CHECK(rec.pulse_samples.size() == 120);
  rec.validate();
}

TEST_CASE("the same master seed produces byte-identical datasets") {
  test::TempDir a("synth_a"), b("synth_b");
  const SynthSpec spec = small_spec();
  generate_dataset(spec, a.path(), 1);
  generate_dataset(spec, b.path(), 2);  // different worker count on purpose
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const auto name = entry.path().filename();
    CAPTURE(name.string());
    if (name == "manifest.json") continue;  // paths inside differ by directory
    CHECK(test::read_bytes(entry.path()) == test::read_bytes(b.path() / name));
  }
}

TEST_CASE("segmentation recovers every synthetic pulse") {
  SynthSpec spec = small_spec();
  spec.fs_hz = 5000.0;
  spec.n_trials = 4;
  const RawRecording rec = generate_subject(spec, 1);
  const auto result = preprocess::segment(rec, preprocess::PreprocessConfig{});
  CHECK(result.epochs.n_trials == 4);
  CHECK(result.dropped == 0);
}

TEST_CASE("the full-geometry block preprocesses to trials x 62 x 1500") {
  SynthSpec spec;
  spec.n_ad = 1;
  spec.n_hc = 1;
  spec.n_trials = 120;
  spec.n_channels = 62;
  spec.fs_hz = 2000.0;  // same epoch shape after decimation to 1 kHz
  spec.isi_lo_s = 1.6;
  spec.isi_hi_s = 1.8;
  spec.master_seed = 3;
  const RawRecording rec = generate_subject(spec, 0);
  preprocess::PreprocessConfig cfg;
  cfg.decim_factor = 2;
  const auto result = preprocess::preprocess_pipeline(rec, cfg, 2);
  CHECK(result.epochs.n_trials == 120);
  CHECK(result.epochs.n_channels() == 62);
  CHECK(result.epochs.n_samples == 1500);
  CHECK(result.epochs.t0_index == 500);
  CHECK(result.epochs.fs_hz == 1000.0);
}

TEST_CASE("a huge pulse artifact is excised down to the artifact-free scale") {
  SynthSpec spec = small_spec();
  spec.fs_hz = 5000.0;
  spec.n_trials = 3;
  spec.artifact.amplitude = 1e4;
  const RawRecording with_artifact = generate_subject(spec, 0);
  spec.artifact.amplitude = 0.0;
  const RawRecording without = generate_subject(spec, 0);

  const auto peak_of = [](const RawRecording& rec) {
    const auto result = preprocess::preprocess_pipeline(rec, preprocess::PreprocessConfig{});
    float peak = 0.0f;
    for (const float v : result.epochs.data) peak = std::max(peak, std::abs(v));
    return static_cast<double>(peak);
  };
  const double a = peak_of(with_artifact);
  const double b = peak_of(without);
  CHECK(a < 5.0 * b);
}

TEST_CASE("null effect leaves the P3 feature classless across regenerations") {
  // Monte-Carlo: with zero effect shifts, the class means of the P3 feature
  // must agree within 3 standard errors of the regeneration spread.
  SynthSpec spec = small_spec();
  spec.fs_hz = 1000.0;
  spec.n_trials = 4;
  spec.n_channels = 6;
  const int regens = 10;
  std::vector<double> diffs;
  for (int g = 0; g < regens; ++g) {
    spec.master_seed = 1000 + static_cast<std::uint64_t>(g);
    preprocess::PreprocessConfig cfg;
    cfg.decim_factor = 1;
    double mean_ad = 0.0, mean_hc = 0.0;
    for (int s = 0; s < spec.n_ad + spec.n_hc; ++s) {
      const auto rec = generate_subject(spec, s);
      const auto epochs = preprocess::preprocess_pipeline(rec, cfg).epochs;
      const auto m = montage::builtin_montage(montage::Density::high, epochs.channels);
      const double p3 = features::subject_feature_vector(epochs, m).values[11];
      (s < spec.n_ad ? mean_ad : mean_hc) += p3 / 2.0;
    }
    diffs.push_back(mean_ad - mean_hc);
  }
  double mean_diff = 0.0;
  for (const double d : diffs) mean_diff += d;
  mean_diff /= regens;
  double var = 0.0;
  for (const double d : diffs) var += (d - mean_diff) * (d - mean_diff);
  var /= (regens - 1);
  const double se = std::sqrt(var / regens);
  CHECK(std::abs(mean_diff) < 3.0 * se + 1e-12);
}

TEST_CASE("stronger amplitude reductions never shrink the P3 class distance") {
  SynthSpec base = small_spec();
  base.fs_hz = 1000.0;
  base.n_trials = 6;
  base.n_channels = 8;
  base.n_ad = 4;
  base.n_hc = 4;
  // background low enough that the per-trial window peak tracks the
  // component amplitude instead of the noise extreme
  base.noise = {0.6, 0.3, 0.5};
  base.amp_jitter = 0.01;
  const double shifts[3] = {0.0, -2.0, -4.0};  // the P3 component starts at 4 uV
  double mean_dist[3] = {0.0, 0.0, 0.0};
  preprocess::PreprocessConfig cfg;
  cfg.decim_factor = 1;
  for (int level = 0; level < 3; ++level) {
    for (const std::uint64_t seed : {21ull, 22ull, 23ull}) {
      SynthSpec spec = base;
      spec.effect.amplitude_shift = shifts[level];
      spec.master_seed = seed;
      double mean_ad = 0.0, mean_hc = 0.0;
      for (int s = 0; s < spec.n_ad + spec.n_hc; ++s) {
        const auto rec = generate_subject(spec, s);
        const auto epochs = preprocess::preprocess_pipeline(rec, cfg).epochs;
        const auto m = montage::builtin_montage(montage::Density::high, epochs.channels);
        const double p3 = features::subject_feature_vector(epochs, m).values[11];
        (s < spec.n_ad ? mean_ad : mean_hc) += p3 / spec.n_ad;
      }
      mean_dist[level] += std::abs(mean_ad - mean_hc) / 3.0;
    }
  }
  CHECK(mean_dist[1] >= mean_dist[0]);
  CHECK(mean_dist[2] >= mean_dist[1]);
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec spec = small_spec();
  spec.n_ad = 0;
  CHECK_THROWS_AS(generate_subject(spec, 0), std::runtime_error);
  spec = small_spec();
  spec.effect.target_component = 9;
  CHECK_THROWS_AS(generate_subject(spec, 0), std::runtime_error);
  spec = small_spec();
  spec.isi_lo_s = -1.0;
  CHECK_THROWS_AS(generate_subject(spec, 0), std::runtime_error);
}
