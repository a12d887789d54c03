// tepkit: synthetic TMS-EEG generation, preprocessing, feature extraction
// and AD-vs-HC classification under leave-one-subject-out evaluation.
//
// Subcommands: synth | preprocess | features | evaluate | run-all
// Usage errors exit 2; data errors exit 1 with a stage-named message.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tep/evaluate.hpp"
#include "tep/features.hpp"
#include "tep/io.hpp"
#include "tep/montage.hpp"
#include "tep/parallel.hpp"
#include "tep/preprocess.hpp"
#include "tep/synth.hpp"
#include "tep/version.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& msg)
      : std::runtime_error(stage + ": " + msg) {}
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

// ---------------------------------------------------------------------------
// option bundles

struct SynthOptions {
  int ad = 17, hc = 17, trials = 120, channels = 62;
  double fs = 5000.0, isi_lo = 2.0, isi_hi = 4.0;
  double effect_amp = 0.0, effect_latency = 0.0;
  int effect_component = 2;
  double pink = 8.0, white = 3.0, shared = 5.0;
  double artifact_amp = 2000.0;
  double amp_jitter = 0.1, latency_jitter = 3.0;

  tep::synth::SynthSpec to_spec(std::uint64_t seed) const {
    tep::synth::SynthSpec spec;
    spec.n_ad = ad;
    spec.n_hc = hc;
    spec.n_trials = trials;
    spec.n_channels = channels;
    spec.fs_hz = fs;
    spec.isi_lo_s = isi_lo;
    spec.isi_hi_s = isi_hi;
    spec.effect.target_component = effect_component;
    spec.effect.amplitude_shift = effect_amp;
    spec.effect.latency_shift_ms = effect_latency;
    spec.noise.pink_scale = pink;
    spec.noise.white_scale = white;
    spec.noise.shared_scale = shared;
    spec.artifact.amplitude = artifact_amp;
    spec.amp_jitter = amp_jitter;
    spec.latency_jitter_ms = latency_jitter;
    spec.master_seed = seed;
    return spec;
  }

  ordered_json echo() const {
    ordered_json j;
    j["ad"] = ad;
    j["hc"] = hc;
    j["trials"] = trials;
    j["channels"] = channels;
    j["fs_hz"] = fs;
    j["isi_s"] = {isi_lo, isi_hi};
    j["effect"] = {{"component", effect_component},
                   {"amplitude_shift", effect_amp},
                   {"latency_shift_ms", effect_latency}};
    j["noise"] = {{"pink", pink}, {"white", white}, {"shared", shared}};
    j["artifact_amplitude"] = artifact_amp;
    j["amp_jitter"] = amp_jitter;
    j["latency_jitter_ms"] = latency_jitter;
    return j;
  }

  void add_flags(CLI::App* app) {
    app->add_option("--ad", ad, "AD subject count");
    app->add_option("--hc", hc, "HC subject count");
    app->add_option("--trials", trials, "pulses per subject");
    app->add_option("--channels", channels, "channel count");
    app->add_option("--fs", fs, "sampling rate, Hz");
    app->add_option("--isi-lo", isi_lo, "minimum inter-stimulus interval, s");
    app->add_option("--isi-hi", isi_hi, "maximum inter-stimulus interval, s");
    app->add_option("--effect-amp", effect_amp,
                    "amplitude shift added to the AD target component, uV");
    app->add_option("--effect-latency", effect_latency, "AD latency shift, ms");
    app->add_option("--effect-component", effect_component, "target component index");
    app->add_option("--pink", pink, "per-channel 1/f noise std, uV");
    app->add_option("--white", white, "per-channel white noise std, uV");
    app->add_option("--shared", shared, "rank-3 shared background std, uV");
    app->add_option("--artifact-amp", artifact_amp, "pulse transient amplitude, uV");
    app->add_option("--amp-jitter", amp_jitter, "per-subject relative amplitude jitter");
    app->add_option("--latency-jitter", latency_jitter, "per-subject latency jitter, ms");
  }
};

struct PreprocessOptions {
  double pre = 500.0, post = 1000.0;
  double excise_lo = -2.0, excise_hi = 10.0;
  double band_lo = 1.0, band_hi = 80.0;
  int order = 3, decim = 5;

  tep::preprocess::PreprocessConfig to_config() const {
    tep::preprocess::PreprocessConfig cfg;
    cfg.pre_ms = pre;
    cfg.post_ms = post;
    cfg.excise_lo_ms = excise_lo;
    cfg.excise_hi_ms = excise_hi;
    cfg.band_lo_hz = band_lo;
    cfg.band_hi_hz = band_hi;
    cfg.filter_order = order;
    cfg.decim_factor = decim;
    return cfg;
  }

  ordered_json echo() const {
    ordered_json j;
    j["pre_ms"] = pre;
    j["post_ms"] = post;
    j["excise_ms"] = {excise_lo, excise_hi};
    j["band_hz"] = {band_lo, band_hi};
    j["filter_order"] = order;
    j["decim_factor"] = decim;
    return j;
  }

  void add_flags(CLI::App* app) {
    app->add_option("--pre", pre, "epoch extent before the pulse, ms");
    app->add_option("--post", post, "epoch extent after the pulse, ms");
    app->add_option("--excise-lo", excise_lo, "excision window start, ms");
    app->add_option("--excise-hi", excise_hi, "excision window end, ms");
    app->add_option("--band-lo", band_lo, "band-pass low edge, Hz");
    app->add_option("--band-hi", band_hi, "band-pass high edge, Hz");
    app->add_option("--order", order, "Butterworth prototype order");
    app->add_option("--decim", decim, "decimation factor");
  }
};

struct ClassifierOptions {
  int n_trees = 100, min_leaf = 10, mtry = 0, k = 7, leaf_size = 10;
  bool no_bootstrap = false;

  tep::classify::ClassifierSpec to_spec(tep::classify::ClassifierKind kind) const {
    tep::classify::ClassifierSpec spec;
    spec.kind = kind;
    spec.tree.min_leaf = min_leaf;
    spec.knn.k = k;
    spec.knn.leaf_size = leaf_size;
    spec.forest.n_trees = n_trees;
    spec.forest.min_leaf = min_leaf;
    spec.forest.mtry = mtry > 0 ? mtry : -1;
    spec.forest.bootstrap = !no_bootstrap;
    return spec;
  }

  ordered_json echo(tep::classify::ClassifierKind kind) const {
    ordered_json j;
    switch (kind) {
      case tep::classify::ClassifierKind::dt:
        j["criterion"] = "entropy";
        j["min_leaf"] = min_leaf;
        break;
      case tep::classify::ClassifierKind::knn:
        j["k"] = k;
        j["weights"] = "inverse_distance";
        j["index"] = "ball_tree";
        j["leaf_size"] = leaf_size;
        break;
      case tep::classify::ClassifierKind::rf:
        j["criterion"] = "entropy";
        j["n_trees"] = n_trees;
        j["min_leaf"] = min_leaf;
        j["mtry"] = mtry > 0 ? mtry : static_cast<int>(std::floor(std::sqrt(14.0)));
        j["bootstrap"] = !no_bootstrap;
        break;
    }
    return j;
  }

  void add_flags(CLI::App* app) {
    app->add_option("--n-trees", n_trees, "random forest size");
    app->add_option("--min-leaf", min_leaf, "minimum training samples per leaf");
    app->add_option("--mtry", mtry, "features considered per split (0 = sqrt(d))");
    app->add_option("--k", k, "kNN neighbor count");
    app->add_option("--leaf-size", leaf_size, "ball tree leaf size");
    app->add_flag("--no-bootstrap", no_bootstrap, "train forest trees without resampling");
  }
};

// ---------------------------------------------------------------------------
// stage helpers

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ','))
    if (!token.empty()) out.push_back(token);
  if (out.empty()) throw std::runtime_error("empty selector list");
  return out;
}

tep::montage::Montage resolve_montage(const std::string& token,
                                      const std::vector<tep::ChannelLabel>& channels) {
  if (!token.empty() && token.front() == '@')
    return tep::montage::load_montage(token.substr(1));
  return tep::montage::builtin_montage(tep::montage::density_from_string(token), channels);
}

tep::Manifest do_synth(const SynthOptions& opts, std::uint64_t seed, const fs::path& out_dir,
                       int threads) {
  return run_stage("synth", [&] {
    const auto start = std::chrono::steady_clock::now();
    const auto manifest = tep::synth::generate_dataset(opts.to_spec(seed), out_dir, threads);
    std::cerr << "[tepkit] synth: " << manifest.subjects.size() << " subjects -> "
              << out_dir.string() << " (" << elapsed_ms(start) << " ms)\n";
    return manifest;
  });
}

tep::Manifest do_preprocess(const fs::path& manifest_path, const fs::path& out_dir,
                            const PreprocessOptions& opts, int threads) {
  return run_stage("preprocess", [&] {
    const auto start = std::chrono::steady_clock::now();
    const tep::Manifest manifest = tep::io::load_manifest(manifest_path);
    const auto cfg = opts.to_config();
    cfg.validate(manifest.fs_hz);
    fs::create_directories(out_dir);

    tep::Manifest epochs_manifest;
    epochs_manifest.fs_hz = manifest.fs_hz / cfg.decim_factor;
    epochs_manifest.channel_labels = manifest.channel_labels;
    epochs_manifest.subjects = manifest.subjects;
    std::vector<ordered_json> log_rows(manifest.subjects.size());

    tep::parallel_for(manifest.subjects.size(), threads, [&](std::size_t i) {
      const auto& subject = manifest.subjects[i];
      const tep::RawRecording raw = tep::io::read_recording(subject.path);
      const auto result = tep::preprocess::preprocess_pipeline(raw, cfg, 1);
      const fs::path out_path = out_dir / (subject.id + ".tepe");
      tep::io::write_epochs(result.epochs, out_path);
      epochs_manifest.subjects[i].path = out_path.string();
      ordered_json row;
      row["id"] = subject.id;
      row["n_pulses"] = raw.pulse_samples.size();
      row["n_dropped"] = result.dropped;
      row["n_trials"] = result.epochs.n_trials;
      log_rows[i] = std::move(row);
    });

    tep::io::write_manifest(epochs_manifest, out_dir / "manifest.json");
    ordered_json log;
    log["config"] = opts.echo();
    log["subjects"] = log_rows;
    std::ofstream log_out(out_dir / "preprocess_log.json", std::ios::trunc);
    log_out << log.dump(2) << "\n";
    std::cerr << "[tepkit] preprocess: " << manifest.subjects.size() << " subjects -> "
              << out_dir.string() << " (" << elapsed_ms(start) << " ms)\n";
    return epochs_manifest;
  });
}

std::vector<tep::SubjectFeatures> do_features(const fs::path& epochs_dir,
                                              const std::string& montage_token,
                                              int threads) {
  return run_stage("features", [&] {
    const auto start = std::chrono::steady_clock::now();
    const tep::Manifest manifest = tep::io::load_manifest(epochs_dir / "manifest.json");
    const tep::montage::Montage m = resolve_montage(montage_token, manifest.channel_labels);
    std::vector<tep::SubjectFeatures> features(manifest.subjects.size());
    std::vector<std::size_t> degenerate(manifest.subjects.size(), 0);
    tep::parallel_for(manifest.subjects.size(), threads, [&](std::size_t i) {
      const auto& subject = manifest.subjects[i];
      const tep::EpochSet epochs = tep::io::read_epochs(subject.path);
      const auto vec = tep::features::subject_feature_vector(epochs, m);
      features[i].id = subject.id;
      features[i].label = subject.label;
      features[i].values = vec.values;
      degenerate[i] = vec.degenerate_channels;
    });
    std::size_t total_degenerate = 0;
    for (const auto d : degenerate) total_degenerate += d;
    if (total_degenerate > 0)
      std::cerr << "[tepkit] features: warning: " << total_degenerate
                << " flat trial-channels produced zero Hjorth features\n";
    std::cerr << "[tepkit] features: montage " << m.name << " (" << m.labels.size()
              << " channels), " << features.size() << " subjects ("
              << elapsed_ms(start) << " ms)\n";
    return features;
  });
}

tep::EvaluationReport do_evaluate(const std::vector<tep::SubjectFeatures>& features,
                                  const ClassifierOptions& opts,
                                  tep::classify::ClassifierKind kind, int runs,
                                  std::uint64_t seed, int threads,
                                  const ordered_json& config_echo) {
  return run_stage("evaluate", [&] {
    const auto start = std::chrono::steady_clock::now();
    auto report = tep::evaluate::repeated_evaluation(features, opts.to_spec(kind), runs,
                                                     seed, threads);
    report.config_json = config_echo.dump();
    std::cerr << "[tepkit] evaluate: " << tep::classify::to_string(kind) << ", " << runs
              << " runs, averaged accuracy " << report.averaged.accuracy << " ("
              << elapsed_ms(start) << " ms)\n";
    return report;
  });
}

ordered_json base_echo(const std::string& command, int runs, std::uint64_t seed,
                       std::size_t n_subjects) {
  ordered_json j;
  j["version"] = tep::kVersion;
  j["command"] = command;
  j["runs"] = runs;
  j["seed"] = seed;
  j["n_subjects"] = n_subjects;
  return j;
}

void attach_json_config(CLI::App* app) {
  static std::map<CLI::App*, std::string> sinks;
  app->add_option("--config", sinks[app],
                  "JSON object of option values (command-line flags override)");
}

// Expands every `--config FILE` into option tokens inserted right after the
// subcommand name, so file values parse like ordinary flags. All options use
// a take-last policy, which makes explicit command-line flags win.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const std::vector<std::string> subcommands = {"synth", "preprocess", "features",
                                                "evaluate", "run-all"};
  std::size_t sub_pos = args.size();
  for (std::size_t i = 0; i < args.size(); ++i)
    if (std::find(subcommands.begin(), subcommands.end(), args[i]) != subcommands.end()) {
      sub_pos = i;
      break;
    }
  if (sub_pos == args.size()) return args;

  std::vector<std::string> expanded;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    std::string file;
    if (args[i] == "--config" && i + 1 < args.size())
      file = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      file = args[i].substr(9);
    else
      continue;
    std::ifstream in(file);
    if (!in) throw StageError("config", file + ": cannot open config file");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw StageError("config", file + ": parse error: " + e.what());
    }
    if (!j.is_object()) throw StageError("config", file + ": must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "config") continue;
      if (value.is_boolean()) {
        expanded.push_back("--" + key + (value.get<bool>() ? "=true" : "=false"));
      } else if (value.is_string()) {
        expanded.push_back("--" + key);
        expanded.push_back(value.get<std::string>());
      } else if (value.is_number()) {
        expanded.push_back("--" + key);
        expanded.push_back(value.dump());
      } else {
        throw StageError("config", file + ": key \"" + key +
                                       "\" must be a scalar (use comma lists)");
      }
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1), expanded.begin(),
              expanded.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TMS-EEG evoked-response classification toolkit"};
  app.set_version_flag("--version", tep::kVersion);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  int threads = tep::default_threads();
  app.add_option("--threads", threads, "worker threads (never changes results)")
      ->envname("TEPKIT_THREADS");

  const auto add_command = [&app](const std::string& name, const std::string& desc) {
    auto* sub = app.add_subcommand(name, desc);
    sub->fallthrough();  // parent options like --threads work after the subcommand
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    return sub;
  };

  // ---- synth ----
  auto* synth_cmd = add_command("synth", "generate a synthetic TMS-EEG dataset");
  SynthOptions synth_opts;
  synth_opts.add_flags(synth_cmd);
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth_cmd->add_option("--seed", synth_seed, "master seed")->envname("TEPKIT_SEED");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  attach_json_config(synth_cmd);
  synth_cmd->callback([&] { do_synth(synth_opts, synth_seed, synth_out, threads); });

  // ---- preprocess ----
  auto* pre_cmd = add_command("preprocess", "segment, clean and filter recordings");
  PreprocessOptions pre_opts;
  pre_opts.add_flags(pre_cmd);
  std::string pre_manifest, pre_out;
  pre_cmd->add_option("--manifest", pre_manifest, "dataset manifest.json")->required();
  pre_cmd->add_option("--out", pre_out, "output directory for TEPE epochs")->required();
  attach_json_config(pre_cmd);
  pre_cmd->callback([&] { do_preprocess(pre_manifest, pre_out, pre_opts, threads); });

  // ---- features ----
  auto* feat_cmd = add_command("features", "extract per-subject feature vectors");
  std::string feat_epochs, feat_montage = "high", feat_out = "features.csv";
  feat_cmd->add_option("--epochs", feat_epochs, "directory with epochs manifest.json")
      ->required();
  feat_cmd->add_option("--montage", feat_montage, "low|medium|high|@montage.json");
  feat_cmd->add_option("--out", feat_out, "output CSV path");
  attach_json_config(feat_cmd);
  feat_cmd->callback([&] {
    const auto features = do_features(feat_epochs, feat_montage, threads);
    run_stage("features", [&] {
      tep::io::write_features_csv(features, feat_out);
      return 0;
    });
  });

  // ---- evaluate ----
  auto* eval_cmd = add_command("evaluate", "LOSO classification of a feature table");
  ClassifierOptions eval_clf;
  eval_clf.add_flags(eval_cmd);
  std::string eval_features, eval_classifier = "rf", eval_out = "report.json", eval_csv;
  int eval_runs = 100;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--features", eval_features, "features.csv path")->required();
  eval_cmd->add_option("--classifier", eval_classifier, "dt|knn|rf");
  eval_cmd->add_option("--runs", eval_runs, "repetitions to average");
  eval_cmd->add_option("--seed", eval_seed, "master seed")->envname("TEPKIT_SEED");
  eval_cmd->add_option("--out", eval_out, "report JSON path");
  eval_cmd->add_option("--csv", eval_csv, "also write a CSV report here");
  attach_json_config(eval_cmd);
  eval_cmd->callback([&] {
    const auto kind = run_stage("evaluate", [&] {
      return tep::classify::classifier_from_string(eval_classifier);
    });
    const auto features = run_stage("evaluate", [&] {
      return tep::io::read_features_csv(eval_features);
    });
    ordered_json echo = base_echo("evaluate", eval_runs, eval_seed, features.size());
    echo["features_file"] = eval_features;
    echo["classifier"] = eval_classifier;
    echo["classifier_params"] = eval_clf.echo(kind);
    const auto report =
        do_evaluate(features, eval_clf, kind, eval_runs, eval_seed, threads, echo);
    run_stage("evaluate", [&] {
      tep::io::write_report(report, eval_out, tep::io::ReportFormat::json);
      if (!eval_csv.empty())
        tep::io::write_report(report, eval_csv, tep::io::ReportFormat::csv);
      return 0;
    });
  });

  // ---- run-all ----
  auto* all_cmd = add_command("run-all", "synth? -> preprocess -> features -> evaluate");
  SynthOptions all_synth;
  PreprocessOptions all_pre;
  ClassifierOptions all_clf;
  all_synth.add_flags(all_cmd);
  all_pre.add_flags(all_cmd);
  all_clf.add_flags(all_cmd);
  bool all_do_synth = false;
  std::string all_manifest, all_montage = "high", all_classifier = "rf", all_out;
  int all_runs = 100;
  std::uint64_t all_seed = 0;
  all_cmd->add_flag("--synth", all_do_synth, "generate the dataset first");
  all_cmd->add_option("--manifest", all_manifest, "existing dataset manifest.json");
  all_cmd->add_option("--montage", all_montage, "comma list of low|medium|high|@file");
  all_cmd->add_option("--classifier", all_classifier, "comma list of dt|knn|rf");
  all_cmd->add_option("--runs", all_runs, "repetitions to average");
  all_cmd->add_option("--seed", all_seed, "master seed")->envname("TEPKIT_SEED");
  all_cmd->add_option("--out", all_out, "output directory")->required();
  attach_json_config(all_cmd);
  all_cmd->callback([&] {
    const fs::path out_dir(all_out);
    const auto montages = run_stage("run-all", [&] { return split_list(all_montage); });
    const auto classifiers = run_stage("run-all", [&] {
      std::vector<tep::classify::ClassifierKind> kinds;
      for (const auto& token : split_list(all_classifier))
        kinds.push_back(tep::classify::classifier_from_string(token));
      return kinds;
    });
    fs::path manifest_path;
    if (all_do_synth) {
      do_synth(all_synth, all_seed, out_dir / "data", threads);
      manifest_path = out_dir / "data" / "manifest.json";
    } else {
      if (all_manifest.empty())
        throw StageError("run-all", "either --synth or --manifest is required");
      manifest_path = all_manifest;
    }
    do_preprocess(manifest_path, out_dir / "epochs", all_pre, threads);

    for (const auto& montage_token : montages) {
      const auto features = do_features(out_dir / "epochs", montage_token, threads);
      const auto montage_name = montage_token.front() == '@'
                                    ? run_stage("features", [&] {
                                        return tep::montage::load_montage(
                                                   montage_token.substr(1))
                                            .name;
                                      })
                                    : montage_token;
      run_stage("features", [&] {
        tep::io::write_features_csv(features,
                                    out_dir / ("features_" + montage_name + ".csv"));
        return 0;
      });
      for (const auto kind : classifiers) {
        ordered_json echo = base_echo("run-all", all_runs, all_seed, features.size());
        echo["montage"] = montage_name;
        echo["classifier"] = tep::classify::to_string(kind);
        echo["classifier_params"] = all_clf.echo(kind);
        if (all_do_synth) echo["synth"] = all_synth.echo();
        echo["preprocess"] = all_pre.echo();
        const auto report =
            do_evaluate(features, all_clf, kind, all_runs, all_seed, threads, echo);
        const std::string stem =
            "report_" + montage_name + "_" + tep::classify::to_string(kind);
        run_stage("evaluate", [&] {
          tep::io::write_report(report, out_dir / (stem + ".json"),
                                tep::io::ReportFormat::json);
          tep::io::write_report(report, out_dir / (stem + ".csv"),
                                tep::io::ReportFormat::csv);
          return 0;
        });
      }
    }
  });

  try {
    auto args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11's vector overload wants reversed args
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0, usage errors exit 2
  } catch (const std::exception& e) {
    std::cerr << "tepkit: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
