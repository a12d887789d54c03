#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>

#include "helpers.hpp"
#include "tep/io.hpp"
#include "tep/rng.hpp"

using namespace tep;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string manifest_text(int n_ad, int n_hc, bool duplicate_first = false) {
  std::string subjects;
  for (int i = 0; i < n_ad + n_hc; ++i) {
    const std::string id =
        duplicate_first ? "s01" : "s" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
    subjects += std::string(i ? "," : "") + "{\"id\":\"" + id + "\",\"label\":\"" +
                (i < n_ad ? "AD" : "HC") + "\",\"path\":\"" + id + ".tepr\"}";
    if (duplicate_first && i == 1) break;
  }
  return "{\"fs_hz\":5000.0,\"channel_labels\":[\"Cz\",\"Fz\"],\"subjects\":[" + subjects +
         "]}";
}

}  // namespace

TEST_CASE("manifest with 17 AD and 17 HC loads 34 records in file order") {
  test::TempDir dir("manifest");
  write_text(dir.path() / "manifest.json", manifest_text(17, 17));
  const Manifest m = io::load_manifest(dir.path() / "manifest.json");
  CHECK(m.subjects.size() == 34);
  CHECK(m.fs_hz == 5000.0);
  int n_ad = 0;
  for (const auto& s : m.subjects) n_ad += s.label == Label::AD ? 1 : 0;
  CHECK(n_ad == 17);
  CHECK(m.subjects.front().id == "s01");
  CHECK(m.subjects.back().id == "s34");
  // subject paths resolve relative to the manifest location
  CHECK(m.subjects.front().path == (dir.path() / "s01.tepr").string());
}

TEST_CASE("empty manifest is rejected") {
  test::TempDir dir("manifest_empty");
  write_text(dir.path() / "m.json",
             R"({"fs_hz":5000.0,"channel_labels":["Cz"],"subjects":[]})");
  CHECK_THROWS_WITH_AS(io::load_manifest(dir.path() / "m.json"),
                       doctest::Contains("empty manifest"), std::runtime_error);
}

TEST_CASE("duplicate subject id is rejected by name") {
  test::TempDir dir("manifest_dup");
  write_text(dir.path() / "m.json", manifest_text(1, 1, true));
  CHECK_THROWS_WITH_AS(io::load_manifest(dir.path() / "m.json"), doctest::Contains("s01"),
                       std::runtime_error);
}

TEST_CASE("unknown label string is rejected") {
  test::TempDir dir("manifest_label");
  write_text(dir.path() / "m.json",
             R"({"fs_hz":5000.0,"channel_labels":["Cz"],
                 "subjects":[{"id":"s01","label":"MCI","path":"s01.tepr"}]})");
  CHECK_THROWS_WITH_AS(io::load_manifest(dir.path() / "m.json"), doctest::Contains("MCI"),
                       std::runtime_error);
}

TEST_CASE("recording round-trip is the identity") {
  test::TempDir dir("tepr");
  auto rec = test::make_recording(2, 10, 5000.0, {3, 7});
  Rng rng(7);
  for (auto& v : rec.data) v = static_cast<float>(rng.normal());
  const auto path = dir.path() / "r.tepr";
  io::write_recording(rec, path);
  const RawRecording back = io::read_recording(path);
  CHECK(back.channels == rec.channels);
  CHECK(back.fs_hz == rec.fs_hz);
  CHECK(back.n_samples == rec.n_samples);
  CHECK(back.pulse_samples == rec.pulse_samples);
  CHECK(back.data == rec.data);  // bit-exact float payload
}

TEST_CASE("bad magic is reported") {
  test::TempDir dir("magic");
  const auto path = dir.path() / "x.tepr";
  std::ofstream out(path, std::ios::binary);
  out << "XXXX";
  const std::uint32_t version = 1, len = 2;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&len), 4);
  out << "{}";
  out.close();
  CHECK_THROWS_WITH_AS(io::read_recording(path), doctest::Contains("bad magic"),
                       std::runtime_error);
}

TEST_CASE("62-channel 5 kHz block with 120 pulses survives the container") {
  test::TempDir dir("block");
  std::vector<std::uint64_t> pulses;
  for (int i = 0; i < 120; ++i) pulses.push_back(5000 + static_cast<std::uint64_t>(i) * 1000);
  auto rec = test::make_recording(62, 130000, 5000.0, pulses);
  const auto path = dir.path() / "block.tepr";
  io::write_recording(rec, path);
  const RawRecording back = io::read_recording(path);
  CHECK(back.pulse_samples.size() == 120);
  CHECK(back.channels.size() == 62);
  CHECK(back.fs_hz == 5000.0);
}

TEST_CASE("non-monotone pulse indices are rejected on read") {
  test::TempDir dir("pulses");
  const auto path = dir.path() / "bad.tepr";
  const std::string header =
      R"({"channels":["A"],"fs_hz":5000.0,"n_samples":4,"pulse_samples":[3,2]})";
  std::ofstream out(path, std::ios::binary);
  out << "TEPR";
  const std::uint32_t version = 1;
  const auto len = static_cast<std::uint32_t>(header.size());
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&len), 4);
  out << header;
  const float payload[4] = {0, 0, 0, 0};
  out.write(reinterpret_cast<const char*>(payload), sizeof payload);
  out.close();
  CHECK_THROWS_WITH_AS(io::read_recording(path), doctest::Contains("non-monotone"),
                       std::runtime_error);
}

TEST_CASE("payload shorter than the header dims is rejected") {
  test::TempDir dir("short");
  const auto path = dir.path() / "short.tepr";
  const std::string header =
      R"({"channels":["A"],"fs_hz":5000.0,"n_samples":4,"pulse_samples":[]})";
  std::ofstream out(path, std::ios::binary);
  out << "TEPR";
  const std::uint32_t version = 1;
  const auto len = static_cast<std::uint32_t>(header.size());
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&len), 4);
  out << header;
  const float payload[2] = {0, 0};  // header says 4
  out.write(reinterpret_cast<const char*>(payload), sizeof payload);
  out.close();
  CHECK_THROWS_WITH_AS(io::read_recording(path), doctest::Contains("length mismatch"),
                       std::runtime_error);
}

TEST_CASE("epoch tensor round-trip at pipeline scale is byte-identical") {
  test::TempDir dir("tepe");
  auto epochs = test::make_epochs(120, 62, 1500, 1000.0, 500);
  Rng rng(11);
  for (auto& v : epochs.data) v = static_cast<float>(rng.normal());
  const auto path = dir.path() / "e.tepe";
  io::write_epochs(epochs, path);
  const EpochSet back = io::read_epochs(path);
  CHECK(back.channels == epochs.channels);
  CHECK(back.t0_index == 500);
  CHECK(back.n_trials == 120);
  CHECK(back.data == epochs.data);
  // writing the reread value reproduces the file bytes exactly
  const auto path2 = dir.path() / "e2.tepe";
  io::write_epochs(back, path2);
  CHECK(test::read_bytes(path) == test::read_bytes(path2));
}

TEST_CASE("t0_index beyond the epoch rejects on write and read") {
  test::TempDir dir("t0");
  auto epochs = test::make_epochs(1, 2, 10, 1000.0, 10);
  CHECK_THROWS_WITH_AS(io::write_epochs(epochs, dir.path() / "bad.tepe"),
                       doctest::Contains("t0_index"), std::runtime_error);
}

TEST_CASE("zero-trial epoch sets are valid and round-trip") {
  test::TempDir dir("empty_epochs");
  const auto epochs = test::make_epochs(0, 3, 100, 1000.0, 10);
  const auto path = dir.path() / "none.tepe";
  io::write_epochs(epochs, path);
  const EpochSet back = io::read_epochs(path);
  CHECK(back.n_trials == 0);
  CHECK(back.n_samples == 100);
  CHECK(back.data.empty());
}

namespace {

EvaluationReport sample_report(int runs) {
  EvaluationReport report;
  report.config_json = R"({"montage":"high","classifier":"rf","seed":7})";
  for (int r = 0; r < runs; ++r) {
    RunResult run;
    run.run_index = r;
    run.seed = 100 + static_cast<std::uint64_t>(r);
    run.counts = {15, 14, 3, 2};
    run.metrics = tep::Metrics{};
    run.metrics.accuracy = (15.0 + 14.0) / 34.0;
    run.metrics.sensitivity = 15.0 / 17.0;
    run.metrics.specificity = 14.0 / 17.0;
    run.metrics.precision = 15.0 / 18.0;
    run.metrics.f1 = 2.0 * run.metrics.precision * run.metrics.sensitivity /
                     (run.metrics.precision + run.metrics.sensitivity);
    report.runs.push_back(run);
  }
  report.averaged = report.runs.front().metrics;
  return report;
}

}  // namespace

TEST_CASE("identical reports serialize to identical bytes") {
  test::TempDir dir("report");
  const auto report = sample_report(3);
  io::write_report(report, dir.path() / "a.json", io::ReportFormat::json);
  io::write_report(report, dir.path() / "b.json", io::ReportFormat::json);
  CHECK(test::read_bytes(dir.path() / "a.json") == test::read_bytes(dir.path() / "b.json"));
  io::write_report(report, dir.path() / "a.csv", io::ReportFormat::csv);
  io::write_report(report, dir.path() / "b.csv", io::ReportFormat::csv);
  CHECK(test::read_bytes(dir.path() / "a.csv") == test::read_bytes(dir.path() / "b.csv"));
}

TEST_CASE("csv report carries one row per run plus the averaged row") {
  test::TempDir dir("report_csv");
  io::write_report(sample_report(100), dir.path() / "r.csv", io::ReportFormat::csv);
  std::ifstream in(dir.path() / "r.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "run,seed,tp,tn,fp,fn,accuracy,sensitivity,specificity,precision,f1");
  int rows = 0;
  std::string last;
  while (std::getline(in, line))
    if (!line.empty()) {
      ++rows;
      last = line;
    }
  CHECK(rows == 101);  // 100 runs + 1 averaged
  CHECK(last.substr(0, 8) == "average,");
}

TEST_CASE("reports with inconsistent totals are rejected") {
  test::TempDir dir("report_bad");
  auto report = sample_report(2);
  report.runs[1].counts = {1, 1, 0, 0};
  CHECK_THROWS_WITH_AS(io::write_report(report, dir.path() / "r.json", io::ReportFormat::json),
                       doctest::Contains("disagree"), std::runtime_error);
}

TEST_CASE("features csv round-trips doubles exactly") {
  test::TempDir dir("features");
  std::vector<SubjectFeatures> features(3);
  Rng rng(5);
  for (std::size_t i = 0; i < features.size(); ++i) {
    features[i].id = "s" + std::to_string(i + 1);
    features[i].label = i % 2 ? Label::HC : Label::AD;
    for (auto& v : features[i].values) v = rng.normal() * 1e-3;
  }
  const auto path = dir.path() / "f.csv";
  io::write_features_csv(features, path);
  const auto back = io::read_features_csv(path);
  REQUIRE(back.size() == features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    CHECK(back[i].id == features[i].id);
    CHECK(back[i].label == features[i].label);
    CHECK(back[i].values == features[i].values);
  }
}
