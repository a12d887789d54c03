#include "tep/io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

namespace tep::io {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  return out;
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(path, "truncated header");
  return v;
}

// magic + version + header; returns the parsed JSON header
ordered_json read_container_header(std::ifstream& in, const std::filesystem::path& path,
                                   const char expected_magic[4]) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in) fail(path, "truncated file (no magic)");
  if (std::memcmp(magic, expected_magic, 4) != 0)
    fail(path, "bad magic \"" + std::string(magic, 4) + "\" (expected \"" +
                   std::string(expected_magic, 4) + "\")");
  const std::uint32_t version = read_u32(in, path);
  if (version != kFormatVersion)
    fail(path, "unsupported container version " + std::to_string(version));
  const std::uint32_t header_len = read_u32(in, path);
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) fail(path, "truncated header");
  try {
    return ordered_json::parse(header);
  } catch (const std::exception& e) {
    fail(path, std::string("header parse error: ") + e.what());
  }
  return {};
}

void write_container(const std::filesystem::path& path, const char magic[4],
                     const ordered_json& header, const std::vector<float>& payload) {
  auto out = open_out(path);
  out.write(magic, 4);
  write_u32(out, kFormatVersion);
  const std::string header_text = header.dump();
  write_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) fail(path, "write failed");
}

std::vector<float> read_payload(std::ifstream& in, const std::filesystem::path& path,
                                std::size_t expected_floats) {
  std::vector<float> payload(expected_floats);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(expected_floats * sizeof(float)));
  if (!in || static_cast<std::size_t>(in.gcount()) != expected_floats * sizeof(float))
    fail(path, "header/payload length mismatch (payload shorter than header dims)");
  in.peek();
  if (!in.eof()) fail(path, "header/payload length mismatch (trailing bytes)");
  return payload;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json metrics_to_json(const Metrics& m) {
  ordered_json j;
  j["accuracy"] = m.accuracy;
  j["sensitivity"] = m.sensitivity;
  j["specificity"] = m.specificity;
  j["precision"] = m.precision;
  j["f1"] = m.f1;
  j["flags"] = m.flags;
  return j;
}

void check_report(const EvaluationReport& report) {
  if (report.runs.empty()) throw std::runtime_error("report has no runs");
  const std::uint64_t total = report.runs.front().counts.total();
  double mean_acc = 0.0;
  for (const auto& run : report.runs) {
    if (run.counts.total() != total)
      throw std::runtime_error("report runs disagree on subject count");
    mean_acc += run.metrics.accuracy;
  }
  mean_acc /= static_cast<double>(report.runs.size());
  if (std::abs(mean_acc - report.averaged.accuracy) > 1e-9)
    throw std::runtime_error("report averaged metrics do not match per-run mean");
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(path, std::string("manifest parse error: ") + e.what());
  }
  Manifest m;
  try {
    m.fs_hz = j.at("fs_hz").get<double>();
    m.channel_labels = j.at("channel_labels").get<std::vector<std::string>>();
    const auto base = path.parent_path();
    std::unordered_set<std::string> ids;
    for (const auto& s : j.at("subjects")) {
      SubjectRecord rec;
      rec.id = s.at("id").get<std::string>();
      rec.label = label_from_string(s.at("label").get<std::string>());
      rec.path = (base / s.at("path").get<std::string>()).string();
      if (!ids.insert(rec.id).second)
        fail(path, "duplicate subject id \"" + rec.id + "\"");
      m.subjects.push_back(std::move(rec));
    }
  } catch (const ordered_json::exception& e) {
    fail(path, std::string("manifest parse error: ") + e.what());
  }
  if (m.subjects.empty()) fail(path, "empty manifest");
  if (m.fs_hz <= 0.0) fail(path, "fs_hz must be positive");
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  ordered_json j;
  j["fs_hz"] = manifest.fs_hz;
  j["channel_labels"] = manifest.channel_labels;
  j["subjects"] = ordered_json::array();
  const auto base = path.parent_path();
  for (const auto& s : manifest.subjects) {
    // store paths relative to the manifest when possible
    std::filesystem::path p(s.path);
    const auto rel = p.lexically_relative(base.empty() ? "." : base);
    ordered_json sj;
    sj["id"] = s.id;
    sj["label"] = to_string(s.label);
    sj["path"] = (!rel.empty() && rel.native()[0] != '.') ? rel.string() : p.string();
    j["subjects"].push_back(std::move(sj));
  }
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) fail(path, "write failed");
}

RawRecording read_recording(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto header = read_container_header(in, path, "TEPR");
  RawRecording rec;
  try {
    rec.channels = header.at("channels").get<std::vector<std::string>>();
    rec.fs_hz = header.at("fs_hz").get<double>();
    rec.n_samples = header.at("n_samples").get<std::size_t>();
    rec.pulse_samples = header.at("pulse_samples").get<std::vector<std::uint64_t>>();
  } catch (const ordered_json::exception& e) {
    fail(path, std::string("header field error: ") + e.what());
  }
  rec.data = read_payload(in, path, rec.channels.size() * rec.n_samples);
  try {
    rec.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return rec;
}

void write_recording(const RawRecording& rec, const std::filesystem::path& path) {
  rec.validate();
  ordered_json header;
  header["channels"] = rec.channels;
  header["fs_hz"] = rec.fs_hz;
  header["n_samples"] = rec.n_samples;
  header["pulse_samples"] = rec.pulse_samples;
  write_container(path, "TEPR", header, rec.data);
}

EpochSet read_epochs(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto header = read_container_header(in, path, "TEPE");
  EpochSet e;
  try {
    e.channels = header.at("channels").get<std::vector<std::string>>();
    e.fs_hz = header.at("fs_hz").get<double>();
    e.t0_index = header.at("t0_index").get<std::size_t>();
    e.n_trials = header.at("n_trials").get<std::size_t>();
    e.n_samples = header.at("n_samples").get<std::size_t>();
  } catch (const ordered_json::exception& e2) {
    fail(path, std::string("header field error: ") + e2.what());
  }
  e.data = read_payload(in, path, e.n_trials * e.channels.size() * e.n_samples);
  try {
    e.validate();
  } catch (const std::exception& e2) {
    fail(path, e2.what());
  }
  return e;
}

void write_epochs(const EpochSet& epochs, const std::filesystem::path& path) {
  epochs.validate();
  ordered_json header;
  header["channels"] = epochs.channels;
  header["fs_hz"] = epochs.fs_hz;
  header["t0_index"] = epochs.t0_index;
  header["n_trials"] = epochs.n_trials;
  header["n_samples"] = epochs.n_samples;
  write_container(path, "TEPE", header, epochs.data);
}

void write_report(const EvaluationReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
  check_report(report);
  if (format == ReportFormat::json) {
    ordered_json j;
    j["config"] = report.config_json.empty()
                      ? ordered_json::object()
                      : ordered_json::parse(report.config_json);
    j["runs"] = ordered_json::array();
    for (const auto& run : report.runs) {
      ordered_json rj;
      rj["run"] = run.run_index;
      rj["seed"] = run.seed;
      rj["tp"] = run.counts.tp;
      rj["tn"] = run.counts.tn;
      rj["fp"] = run.counts.fp;
      rj["fn"] = run.counts.fn;
      rj["metrics"] = metrics_to_json(run.metrics);
      j["runs"].push_back(std::move(rj));
    }
    j["averaged"] = metrics_to_json(report.averaged);
    auto out = open_out(path);
    out << j.dump(2) << "\n";
    if (!out) fail(path, "write failed");
    return;
  }
  auto out = open_out(path);
  out << "run,seed,tp,tn,fp,fn,accuracy,sensitivity,specificity,precision,f1\n";
  for (const auto& run : report.runs) {
    const auto& m = run.metrics;
    char head[128];
    std::snprintf(head, sizeof head, "%d,%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64
                  ",%" PRIu64,
                  run.run_index, run.seed, run.counts.tp, run.counts.tn, run.counts.fp,
                  run.counts.fn);
    out << head << ',' << format_fixed(m.accuracy, 6) << ',' << format_fixed(m.sensitivity, 6)
        << ',' << format_fixed(m.specificity, 6) << ',' << format_fixed(m.precision, 6) << ','
        << format_fixed(m.f1, 6) << "\n";
  }
  const auto& a = report.averaged;
  out << "average,,,,,," << format_fixed(a.accuracy, 6) << ',' << format_fixed(a.sensitivity, 6)
      << ',' << format_fixed(a.specificity, 6) << ',' << format_fixed(a.precision, 6) << ','
      << format_fixed(a.f1, 6) << "\n";
  if (!out) fail(path, "write failed");
}

void write_features_csv(const std::vector<SubjectFeatures>& features,
                        const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id,label";
  for (const auto* key : kFeatureKeys) out << ',' << key;
  out << "\n";
  for (const auto& f : features) {
    out << f.id << ',' << to_string(f.label);
    for (const double v : f.values) out << ',' << format_full(v);
    out << "\n";
  }
  if (!out) fail(path, "write failed");
}

std::vector<SubjectFeatures> read_features_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(path, "empty features file");
  std::string expected = "id,label";
  for (const auto* key : kFeatureKeys) expected += std::string(",") + key;
  if (line != expected) fail(path, "unexpected features header");
  std::vector<SubjectFeatures> out;
  std::unordered_set<std::string> ids;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    SubjectFeatures f;
    if (!std::getline(ss, f.id, ',')) fail(path, "malformed row");
    if (!std::getline(ss, cell, ',')) fail(path, "malformed row");
    f.label = label_from_string(cell);
    for (auto& v : f.values) {
      if (!std::getline(ss, cell, ',')) fail(path, "row with missing feature values");
      std::size_t pos = 0;
      v = std::stod(cell, &pos);
      if (pos != cell.size()) fail(path, "bad numeric cell \"" + cell + "\"");
      if (!std::isfinite(v)) fail(path, "non-finite feature value");
    }
    if (std::getline(ss, cell, ',')) fail(path, "row with extra cells");
    if (!ids.insert(f.id).second) fail(path, "duplicate subject id \"" + f.id + "\"");
    out.push_back(std::move(f));
  }
  if (out.empty()) fail(path, "no feature rows");
  return out;
}

}  // namespace tep::io
