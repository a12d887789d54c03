#pragma once

#include <filesystem>
#include <string>

#include "tep/types.hpp"

// On-disk formats.
//
// Binary containers ("TEPR" recordings, "TEPE" epochs) share one layout:
//   magic (4 ASCII bytes) | u32 LE version | u32 LE header byte length |
//   JSON header | payload of 32-bit LE IEEE-754 floats
// Recording payloads are channel-major; epoch payloads are trial-major, then
// channel-major. Write/read round-trips are bit-exact.
//
// manifest.json:
//   { "fs_hz": number, "channel_labels": [string],
//     "subjects": [ { "id": string, "label": "AD"|"HC", "path": string } ] }
// Subject paths are resolved relative to the manifest's directory.
//
// Reports serialize deterministically (insertion-ordered keys, fixed decimal
// formatting in CSV), so equal reports produce equal bytes.

namespace tep::io {

enum class ReportFormat { json, csv };

Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

RawRecording read_recording(const std::filesystem::path& path);
void write_recording(const RawRecording& rec, const std::filesystem::path& path);

EpochSet read_epochs(const std::filesystem::path& path);
void write_epochs(const EpochSet& epochs, const std::filesystem::path& path);

void write_report(const EvaluationReport& report, const std::filesystem::path& path,
                  ReportFormat format);

// features.csv: header "id,label,<14 feature keys>", one row per subject,
// values printed with 17 significant digits so the round-trip is exact.
void write_features_csv(const std::vector<SubjectFeatures>& features,
                        const std::filesystem::path& path);
std::vector<SubjectFeatures> read_features_csv(const std::filesystem::path& path);

}  // namespace tep::io
